use monodromy_core::elmonodromy::{eigenfunction, el_for_class, monodromy_spec, Family};
use monodromy_core::fnspace::TWO_PI;
use monodromy_core::pdeoracle::{measure_monodromy_phase, Grid};
use monodromy_core::svaction::{classify_orbit, SchrodingerOp};
use monodromy_core::Settings;
use num_complex::Complex64;

fn phase_error(a: f64, gamma: f64, n: usize, grid: &Grid) -> f64 {
    let s = Settings::default();
    let op = SchrodingerOp::model(a * a, gamma);
    let cls = classify_orbit(&op, &s).unwrap();
    let el = el_for_class(&op, &cls, &s).unwrap();
    let spec = monodromy_spec(&op, &cls, &el, &s).unwrap();
    let ef = eigenfunction(&cls, &el, Family::Hermite { n }).unwrap();
    let got = measure_monodromy_phase(&op, &ef, grid).unwrap();
    let want: Complex64 = spec.level_phase(n).unwrap();
    (got / want).arg().abs()
}

#[test]
fn elliptic_levels_match_prediction() {
    let grid = Grid::default();
    for &a in &[0.5, 1.3] {
        for &gamma in &[0.0, 0.7] {
            for n in [0, 3] {
                let e = phase_error(a, gamma, n, &grid);
                assert!(e < 1e-3, "a={a} γ={gamma} n={n}: {e}");
            }
        }
    }
}

#[test]
fn split_step_converges_at_second_order() {
    let coarse = Grid::new(16.0, 1024, TWO_PI / 512.0).unwrap();
    let fine = Grid { dtheta: TWO_PI / 1024.0, ..coarse };
    let (e1, e2) = (phase_error(1.3, 0.0, 2, &coarse), phase_error(1.3, 0.0, 2, &fine));
    let ratio = e1 / e2;
    assert!((3.5..4.5).contains(&ratio), "{e1} / {e2} = {ratio}");
}
