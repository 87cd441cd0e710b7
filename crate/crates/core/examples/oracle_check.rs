//! Brute-force checks of the closed forms on a gridded scene.

use slc_glmb::sim::verify::{correlated_pair, oracle_problem, oracle_scene};
use slc_glmb::oracle::{bayes_update_standard, fcd_fd, DiscreteDensity};
use slc_glmb::correlation::factorial_covariance_pair;
use slc_glmb::{glmb, Label, LabeledState};

fn main() -> slc_glmb::Result<()> {
    let scene = oracle_scene(401)?;
    let (prior, sensor, z) = oracle_problem(4, 2)?;
    let closed = DiscreteDensity::from_glmb(&glmb::measurement_update(&prior, &sensor, &z)?, &scene)?;
    let brute = bayes_update_standard(&DiscreteDensity::from_glmb(&prior, &scene)?, &sensor, &z, &scene)?;
    println!("measurements {:?}", z.iter().map(|v| v[0]).collect::<Vec<_>>());
    println!("TV(closed form, brute force) = {:.3e}", closed.tv_distance(&brute));

    let coarse = oracle_scene(201)?;
    let d = correlated_pair(0.7)?;
    let (a, b) = (Label::new(1, 1), Label::new(1, 2));
    for (u, v) in [(-2.04, 1.92), (0.0, 0.0), (1.92, 1.92)] {
        let x1 = LabeledState::new(coarse.grid()[coarse.nearest(&nalgebra::dvector![u])].clone(), a);
        let x2 = LabeledState::new(coarse.grid()[coarse.nearest(&nalgebra::dvector![v])].clone(), b);
        let c = factorial_covariance_pair(&d, &x1, &x2)?;
        let fd = fcd_fd(&d, &x1, &x2, &coarse)?;
        println!("f.c.d.({u:+.2}, {v:+.2}): closed {c:+.6e}  finite difference {fd:+.6e}");
    }
    Ok(())
}
