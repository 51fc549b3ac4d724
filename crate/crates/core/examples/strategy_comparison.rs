//! Same data, three construction strategies: units, residual and
//! conditioning of the resulting feature Gram matrix.

use rplcil::cil::{one_hot, ClassId};
use rplcil::io::{generate_synthetic, SyntheticSpec};
use rplcil::metrics::feature_condition_number;
use rplcil::rpl::seeded_rng;
use rplcil::supervisory::{construct, ConstructionConfig, Strategy};
use rplcil::verify::synthetic_xi_schedule;

fn main() -> rplcil::Result<()> {
    let data = generate_synthetic(&SyntheticSpec {
        classes: 6,
        train_per_class: 50,
        redundancy: 8,
        seed: 3,
        ..SyntheticSpec::default()
    })?;
    let classes: Vec<ClassId> = (0..6).collect();
    let y = one_hot(&data.train_labels, &classes)?;

    println!("{:<6} {:>6} {:>10} {:>12} {}", "", "units", "residual", "cond(H'H)", "termination");
    for strategy in [Strategy::Mgsm, Strategy::Scsm, Strategy::Ri] {
        let cfg = ConstructionConfig {
            s: 10,
            epsilon: 1.0,
            xi_schedule: synthetic_xi_schedule(),
            max_units: 400,
            ..ConstructionConfig::new(strategy)
        };
        let built = construct(&data.train_features, &y, &cfg, &mut seeded_rng(11))?;
        let cond = feature_condition_number(built.state.features(), 512)?;
        println!(
            "{:<6} {:>6} {:>10.4} {:>12.3e} {}",
            strategy.to_string(),
            built.model.total_units(),
            built.state.residual_norm(),
            cond,
            built.termination()
        );
    }
    Ok(())
}
