//! Write and read the binary matrix, label and model files.

use rplcil::io::{read_labels, read_matrix, read_model, write_labels, write_matrix, write_model};
use rplcil::numerics::DenseMatrix;
use rplcil::rpl::{sample_block, seeded_rng, RplModel};

fn main() -> rplcil::Result<()> {
    let dir = std::env::temp_dir().join(format!("rplcil-matrix-files-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;

    let m = DenseMatrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])?;
    write_matrix(&dir.join("m.fmat"), &m)?;
    let back = read_matrix(&dir.join("m.fmat"))?;
    println!("matrix {:?} round trip equal: {}", back.shape(), back == m);

    write_labels(&dir.join("y.lvec"), &[3, 1, 4, 1, 5])?;
    println!("labels {:?}", read_labels(&dir.join("y.lvec"))?);

    let mut rng = seeded_rng(1);
    let mut model = RplModel::new(4);
    model.push(sample_block(&mut rng, 4, 3, 0.5)?)?;
    model.push(sample_block(&mut rng, 4, 3, 1.0)?)?;
    write_model(&dir.join("model.fmat"), &model)?;
    let loaded = read_model(&dir.join("model.fmat"))?;
    println!("model with {} units round trip equal: {}", loaded.total_units(), loaded == model);

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
