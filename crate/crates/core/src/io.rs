//! File formats: state JSON, intensity images, sweep and campaign CSV,
//! photon position dumps.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::estimator::SweepPoint;
use crate::linalg::{Mat, C64};
use crate::pointer::{IntensityImage, PointerGrid};
use crate::qubit_core::{AnyDensityMatrix, DensityMatrix, PureState};
use crate::robustness::CampaignSample;

/// A state as read from JSON: pure amplitudes or a density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateInput {
    Pure(PureState),
    Mixed(AnyDensityMatrix),
}

#[derive(Serialize, Deserialize)]
struct AmplitudesJson {
    amplitudes: Vec<C64>,
}

fn complex_of(v: &Value) -> Result<C64> {
    let pair = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| Error::Parse(format!("expected [re, im], got {v}")))?;
    let num = |x: &Value| x.as_f64().ok_or_else(|| Error::Parse(format!("expected a number, got {x}")));
    Ok(C64::new(num(&pair[0])?, num(&pair[1])?))
}

fn matrix_of<const N: usize>(rows: &[Value]) -> Result<Mat<N>> {
    let mut m = [[C64::new(0.0, 0.0); N]; N];
    for (r, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| Error::Parse("density matrix rows must be arrays".into()))?;
        if row.len() != N {
            return Err(Error::DimensionMismatch(N, row.len()));
        }
        for (c, v) in row.iter().enumerate() {
            m[r][c] = complex_of(v)?;
        }
    }
    Ok(m)
}

/// Parse `{"amplitudes": [[re, im] x 4]}` or `{"density": [[[re, im], ...], ...]}`
/// (2x2 or 4x4, row-major). A bare nested array is read as a density matrix.
pub fn parse_state(text: &str) -> Result<StateInput> {
    let v: Value = serde_json::from_str(text)?;
    if let Some(amps) = v.get("amplitudes") {
        let amps = amps.as_array().ok_or_else(|| Error::Parse("amplitudes must be an array".into()))?;
        if amps.len() != 4 {
            return Err(Error::DimensionMismatch(4, amps.len()));
        }
        let a: Vec<C64> = amps.iter().map(complex_of).collect::<Result<_>>()?;
        return Ok(StateInput::Pure(PureState::new([a[0], a[1], a[2], a[3]])?));
    }
    let rows = v
        .get("density")
        .unwrap_or(&v)
        .as_array()
        .ok_or_else(|| Error::Parse("expected an \"amplitudes\" or \"density\" field".into()))?;
    match rows.len() {
        2 => Ok(StateInput::Mixed(AnyDensityMatrix::Qubit(DensityMatrix::new(matrix_of::<2>(rows)?)?))),
        4 => Ok(StateInput::Mixed(AnyDensityMatrix::TwoQubit(DensityMatrix::new(matrix_of::<4>(rows)?)?))),
        n => Err(Error::DimensionMismatch(4, n)),
    }
}

/// Read a state from a file path, or parse the argument itself as JSON.
pub fn load_state(source: &str) -> Result<StateInput> {
    let trimmed = source.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        parse_state(source)
    } else {
        parse_state(&fs::read_to_string(source)?)
    }
}

pub fn state_to_json(state: &PureState) -> String {
    serde_json::to_string(&AmplitudesJson { amplitudes: state.amplitudes().to_vec() }).expect("serializable")
}

/// CSV image: `nx,<n>`, `ny,<n>`, `extent,<e>`, then one line per row of
/// values. Shortest round-trip float formatting keeps the values bit-exact.
pub fn image_to_csv(image: &IntensityImage) -> String {
    let g = &image.grid;
    let mut s = format!("nx,{}\nny,{}\nextent,{}\n", g.nx(), g.ny(), g.extent());
    for row in image.values.chunks(g.nx()) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            write!(s, "{v:?}").expect("string write");
        }
        s.push('\n');
    }
    s
}

fn header_value(line: Option<std::io::Result<String>>, key: &str) -> Result<String> {
    let line = line.ok_or_else(|| Error::Parse(format!("missing {key} header")))??;
    let (k, v) = line.split_once(',').ok_or_else(|| Error::Parse(format!("malformed header line {line:?}")))?;
    if k.trim() != key {
        return Err(Error::Parse(format!("expected {key} header, found {k:?}")));
    }
    Ok(v.trim().to_string())
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse(format!("invalid number {s:?}")))
}

pub fn image_from_csv<R: Read>(reader: R) -> Result<IntensityImage> {
    let mut lines = BufReader::new(reader).lines();
    let nx: usize = parse_num(&header_value(lines.next(), "nx")?)?;
    let ny: usize = parse_num(&header_value(lines.next(), "ny")?)?;
    let extent: f64 = parse_num(&header_value(lines.next(), "extent")?)?;
    let grid = PointerGrid::new(nx, ny, extent)?;
    let mut values = Vec::with_capacity(grid.len());
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        for v in line.split(',') {
            values.push(parse_num(v)?);
        }
    }
    IntensityImage::new(grid, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawImageHeader {
    pub nx: usize,
    pub ny: usize,
    pub extent: f64,
    pub format: RawFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RawFormat {
    F64le,
}

pub fn sidecar_path(raw: &Path) -> PathBuf {
    raw.with_extension("json")
}

/// Write the values as little-endian f64 to `path` and the grid to a
/// `.json` sidecar next to it.
pub fn write_image_raw(image: &IntensityImage, path: &Path) -> Result<()> {
    let g = &image.grid;
    let header = RawImageHeader { nx: g.nx(), ny: g.ny(), extent: g.extent(), format: RawFormat::F64le };
    let mut bytes = Vec::with_capacity(8 * image.values.len());
    for v in &image.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&header)?)?;
    Ok(())
}

pub fn read_image_raw(path: &Path) -> Result<IntensityImage> {
    let header: RawImageHeader = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    let grid = PointerGrid::new(header.nx, header.ny, header.extent)?;
    let bytes = fs::read(path)?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::DimensionMismatch(8 * grid.len(), bytes.len()));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    IntensityImage::new(grid, values)
}

/// Both export formats of one image: `<stem>.csv`, `<stem>.bin` and `<stem>.json`.
pub fn dump_image(image: &IntensityImage, dir: &Path, stem: &str) -> Result<[PathBuf; 2]> {
    fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{stem}.csv"));
    fs::write(&csv, image_to_csv(image))?;
    let raw = dir.join(format!("{stem}.bin"));
    write_image_raw(image, &raw)?;
    Ok([csv, raw])
}

fn fmt_or_nan(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:?}"))
}

/// Header `m0,m1,C`; excluded points carry `nan`.
pub fn sweep_to_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("m0,m1,C\n");
    for p in points {
        writeln!(s, "{:?},{:?},{}", p.m0, p.m1, fmt_or_nan(p.concurrence)).expect("string write");
    }
    s
}

pub fn sweep_from_csv(text: &str) -> Result<Vec<SweepPoint>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("m0,m1,C") {
        return Err(Error::Parse("sweep CSV must start with m0,m1,C".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 3 {
                return Err(Error::Parse(format!("expected 3 fields in {l:?}")));
            }
            let c = if f[2].trim() == "nan" { None } else { Some(parse_num(f[2])?) };
            Ok(SweepPoint { m0: parse_num(f[0])?, m1: parse_num(f[1])?, concurrence: c })
        })
        .collect()
}

/// One row per sample: index, mixing weight, certificate, then
/// `<check>_lhs,<check>_rhs,<check>_slack` for every check.
pub fn campaign_to_csv(rows: &[CampaignSample]) -> String {
    let mut s = String::from("sample,epsilon,m_upper");
    if let Some(first) = rows.first() {
        for c in &first.checks {
            write!(s, ",{0}_lhs,{0}_rhs,{0}_slack", c.name).expect("string write");
        }
    }
    s.push('\n');
    for r in rows {
        write!(s, "{},{:?},{:?}", r.index, r.epsilon, r.m_upper).expect("string write");
        for c in &r.checks {
            write!(s, ",{:?},{:?},{:?}", c.lhs, c.rhs, c.slack).expect("string write");
        }
        s.push('\n');
    }
    s
}

/// `u64` little-endian count, then `(x, y)` pairs as little-endian f64.
pub fn write_positions<W: Write>(mut w: W, positions: &[(f64, f64)]) -> Result<()> {
    w.write_all(&(positions.len() as u64).to_le_bytes())?;
    for (x, y) in positions {
        w.write_all(&x.to_le_bytes())?;
        w.write_all(&y.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_positions<R: Read>(mut r: R) -> Result<Vec<(f64, f64)>> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let n = u64::from_le_bytes(buf) as usize;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut buf)?;
        let x = f64::from_le_bytes(buf);
        r.read_exact(&mut buf)?;
        out.push((x, f64::from_le_bytes(buf)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pure_and_mixed_states() {
        let s = parse_state(r#"{"amplitudes": [[0.7071067811865476,0],[0,0],[0,0],[0.7071067811865476,0]]}"#).unwrap();
        assert!(matches!(s, StateInput::Pure(_)));
        let m = parse_state(r#"{"density": [[[0.5,0],[0,0]],[[0,0],[0.5,0]]]}"#).unwrap();
        assert!(matches!(m, StateInput::Mixed(AnyDensityMatrix::Qubit(_))));
        let err = parse_state(r#"{"amplitudes": [[1,0],[1,0],[0,0],[0,0]]}"#).unwrap_err();
        assert!(err.to_string().contains("norm"));
        assert!(parse_state("{").is_err());
        assert!(parse_state(r#"{"amplitudes": [[1,0]]}"#).is_err());
    }

    #[test]
    fn state_json_round_trip() {
        let s = PureState::bell_phi_plus();
        match parse_state(&state_to_json(&s)).unwrap() {
            StateInput::Pure(p) => assert_eq!(p, s),
            _ => panic!("expected a pure state"),
        }
    }

    #[test]
    fn positions_round_trip() {
        let pts = vec![(0.1, -2.5), (f64::MIN_POSITIVE, 3.0)];
        let mut buf = Vec::new();
        write_positions(&mut buf, &pts).unwrap();
        assert_eq!(buf.len(), 8 + 32);
        assert_eq!(read_positions(buf.as_slice()).unwrap(), pts);
    }

    #[test]
    fn sweep_csv_marks_excluded_points() {
        let pts = vec![
            SweepPoint { m0: 0.0, m1: 0.0, concurrence: None },
            SweepPoint { m0: 0.5, m1: 1.0, concurrence: Some(2.0 / 3.0) },
        ];
        let csv = sweep_to_csv(&pts);
        assert!(csv.starts_with("m0,m1,C\n0.0,0.0,nan\n"));
        assert_eq!(sweep_from_csv(&csv).unwrap(), pts);
    }
}
