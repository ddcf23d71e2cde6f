use kcurv::solver::Problem;
use kcurv::TrigField;
use kcurv_bench::{banded, manufactured};

#[test]
fn manufactured_input_is_near_solution() {
    let cfg = manufactured(17, 32);
    let u = TrigField::manufactured(0.5, 0.1).sample(cfg.grid);
    let r = Problem::new(&cfg).unwrap().evaluate(&u, 1.0).unwrap();
    assert!(r.max_residual < 1e-2);
}

#[test]
fn banded_input_factors() {
    let m = banded(60, 5, 5);
    let x: Vec<f64> = (0..60).map(|i| i as f64).collect();
    let b = m.mul_vec(&x);
    let y = m.factor().unwrap().solve(&b);
    let err = x.iter().zip(&y).fold(0.0f64, |e, (a, b)| e.max((a - b).abs()));
    assert!(err < 1e-10);
}
