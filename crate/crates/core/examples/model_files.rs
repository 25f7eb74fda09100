//! Write and read the model and dataset file formats, then differentiate the
//! reloaded model.

use repu_tik::datagen::{make_noisy_dataset, make_target, NoiseKind, NoisyDataset, TargetKind, TargetSpec};
use repu_tik::model_io;
use repu_tik::network::MultiIndex;
use repu_tik::quadrature::QuadratureRule;
use repu_tik::solver::differentiate;

fn main() -> repu_tik::error::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| repu_tik::error::Error::io(".", e))?;
    let target = make_target(&TargetSpec::ReferenceNetwork { k: 3, d: 2, neurons: 3 }, 5)?;
    let TargetKind::ReferenceNetwork(net) = &target.kind else {
        unreachable!("reference targets are networks")
    };

    let model_path = dir.path().join("model.json");
    model_io::save(net, &model_path)?;
    let back = model_io::load(&model_path)?;
    println!("model round trip exact: {}", &back == net);
    println!("{}", model_io::to_json(&back)?);

    let rule = QuadratureRule::lattice(64, 2, 1, 0)?;
    let data = make_noisy_dataset(&target, &rule, 0.05, NoiseKind::GaussianIid, 2)?;
    let data_path = dir.path().join("data.json");
    data.save(&data_path)?;
    let reloaded = NoisyDataset::load(&data_path)?;
    println!("dataset round trip exact: {}", reloaded.values() == data.values());
    println!("first CSV rows:");
    for line in data.to_csv()?.lines().take(3) {
        println!("  {line}");
    }

    let alphas = vec![MultiIndex::new(vec![2, 0]), MultiIndex::new(vec![1, 1])];
    let values = differentiate(&back, &[vec![0.3, 0.6]], &alphas)?;
    println!("d^(2,0), d^(1,1) at (0.3, 0.6): {:?}", values[0]);
    Ok(())
}
