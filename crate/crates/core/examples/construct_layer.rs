//! Grow a projection layer on Gaussian blobs and print the construction log.
//!
//! cargo run --example construct_layer -- [seed]

use rplcil::cil::{one_hot, ClassId};
use rplcil::io::{generate_synthetic, SyntheticSpec};
use rplcil::rpl::seeded_rng;
use rplcil::supervisory::{construct, initial_residual, ConstructionConfig, Strategy};
use rplcil::verify::synthetic_xi_schedule;

fn main() -> rplcil::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let data = generate_synthetic(&SyntheticSpec {
        classes: 5,
        train_per_class: 40,
        feature_dim: 8,
        seed,
        ..SyntheticSpec::default()
    })?;
    let classes: Vec<ClassId> = (0..5).collect();
    let y = one_hot(&data.train_labels, &classes)?;

    let cfg = ConstructionConfig {
        s: 10,
        b_max: 10,
        epsilon: 1.0,
        xi_schedule: synthetic_xi_schedule(),
        max_units: 300,
        ..ConstructionConfig::new(Strategy::Mgsm)
    };
    println!("initial residual {:.4}", initial_residual(&y));
    let built = construct(&data.train_features, &y, &cfg, &mut seeded_rng(seed))?;

    println!("{:>4} {:>5} {:>8} {:>10} {:>12} {:>12} {:>6}", "it", "xi", "accepted", "residual", "lhs", "coupling", "units");
    for r in &built.log.records {
        println!(
            "{:>4} {:>5.2} {:>8} {:>10.4} {:>12.4} {:>12.4} {:>6}",
            r.iteration,
            r.xi,
            r.accepted.map_or("-".to_string(), |j| j.to_string()),
            r.residual_after,
            r.lhs_aggregate.unwrap_or(f64::NAN),
            r.coupling_aggregate.unwrap_or(f64::NAN),
            r.hidden_units
        );
    }
    println!(
        "{} units, residual {:.4}, {}",
        built.model.total_units(),
        built.state.residual_norm(),
        built.termination()
    );
    Ok(())
}
