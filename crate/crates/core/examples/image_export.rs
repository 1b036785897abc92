//! Write the two branch images to disk, read them back, and re-run the
//! estimate from the files alone.

use weak_concurrence::io::{dump_image, read_image_raw};
use weak_concurrence::pointer::{branch_images, estimate_from_images, CouplingStrength, OpticalSetup, PointerGrid};
use weak_concurrence::qubit_core::{PureState, Subsystem};

fn main() -> weak_concurrence::Result<()> {
    let dir = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("weak-concurrence-images"), Into::into);
    std::fs::create_dir_all(&dir)?;
    let setup = OpticalSetup::new(PointerGrid::square(256, 6.0)?, CouplingStrength::new(0.01)?);
    let images = branch_images(&PureState::bell_phi_plus().reduced(Subsystem::A), &setup)?;
    for (b, img) in images.iter().enumerate() {
        let [csv, raw] = dump_image(img, &dir, &format!("image_{b}"))?;
        println!("wrote {} and {}", csv.display(), raw.display());
    }
    let back = [read_image_raw(&dir.join("image_0.bin"))?, read_image_raw(&dir.join("image_1.bin"))?];
    assert_eq!(back[0].values, images[0].values);
    let report = estimate_from_images(&back, &setup)?;
    println!("C from files = {:.6} via {:?}", report.concurrence, report.route);
    Ok(())
}
