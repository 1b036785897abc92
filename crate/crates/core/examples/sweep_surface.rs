//! The concurrence surface over weak-value magnitudes, printed as a coarse
//! text map ('.' marks the excluded region).

use weak_concurrence::estimator::sweep_surface;

fn main() -> weak_concurrence::Result<()> {
    let n = 21;
    let points = sweep_surface(n, 2.0)?;
    println!("rows: |w0| from 0 to 2, columns: |w1| from 0 to 2, digit = floor(10 C)");
    for row in points.chunks(n) {
        let line: String = row
            .iter()
            .map(|p| match p.concurrence {
                Some(c) => char::from_digit(((c * 10.0) as u32).min(9), 10).unwrap(),
                None => '.',
            })
            .collect();
        println!("{:>4.1}  {line}", row[0].m0);
    }
    Ok(())
}
