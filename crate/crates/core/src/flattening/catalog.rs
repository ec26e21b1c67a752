//! Families in ℝ³ used by tests, the acceptance run and the CLI.

use super::dot;
use super::family::{normal_basis, RegularFamily, StageSpec};
use crate::expr::Expr;

fn unit(v: [f64; 3]) -> Vec<f64> {
    let l = dot(&v, &v).sqrt();
    v.iter().map(|a| a / l).collect()
}

fn stage(lambda: Vec<f64>, zeta: &str, zeta_prime: Option<&str>, l: f64) -> StageSpec {
    StageSpec {
        lambda,
        zeta: Expr::parse(zeta).expect("catalog expression"),
        zeta_prime: zeta_prime.map(|s| Expr::parse(s).expect("catalog expression")),
        lipschitz: l,
    }
}

fn build(stages: Vec<StageSpec>) -> RegularFamily {
    RegularFamily::new(stages).expect("catalog family")
}

/// The tilted plane `{q·λ = 0}`, `λ = (0.1, 0, √0.99)`.
pub fn single_plane() -> RegularFamily {
    build(vec![stage(vec![0.1, 0.0, 0.99f64.sqrt()], "0", None, 0.0)])
}

/// `{q₃ = 0}` below `{q₃ = 1}`, both relative to `e₃`.
pub fn parallel_pair() -> RegularFamily {
    let e3 = vec![0.0, 0.0, 1.0];
    build(vec![stage(e3.clone(), "0", Some("1"), 0.0), stage(e3, "1", None, 0.0)])
}

/// The planes `{q·ν = c}` for `c = −1/2, 0, 1/2` as graphs relative to three
/// different tilted directions.
pub fn tilted_planes() -> RegularFamily {
    let nu = unit([0.2, -0.1, 1.0]);
    let levels = [-0.5, 0.0, 0.5];
    let dirs = [unit([0.1, 0.0, 1.0]), unit([0.0, 0.1, 1.0]), unit([-0.1, 0.05, 1.0])];
    // q = Bx + hλ lies on {q·ν = c} iff h = (c − Σ xᵢ bᵢ·ν) / λ·ν
    let plane = |lambda: &[f64], c: f64| -> (String, f64) {
        let ln = dot(lambda, &nu);
        let coef: Vec<f64> = normal_basis(lambda).iter().map(|b| -dot(b, &nu) / ln).collect();
        let l = dot(&coef, &coef).sqrt();
        (format!("{:e} + {:e}*x1 + {:e}*x2", c / ln, coef[0], coef[1]), l)
    };
    let mut stages = Vec::new();
    for k in 0..3 {
        let (z, l) = plane(&dirs[k], levels[k]);
        let zp = (k < 2).then(|| plane(&dirs[k], levels[k + 1]).0);
        stages.push(stage(dirs[k].clone(), &z, zp.as_deref(), l));
    }
    build(stages)
}

/// A plane through the origin and a Lipschitz cone surface above it, relative
/// to one tilted direction. Both contain the origin.
pub fn cone_pair() -> RegularFamily {
    let lam = vec![0.1, 0.0, 0.99f64.sqrt()];
    let top = "sqrt(x1^2 + x2^2)/4";
    build(vec![stage(lam.clone(), "0", Some(top), 0.25), stage(lam, top, None, 0.25)])
}

/// Like [`parallel_pair`] but the upper surface `1 + |3x₁|` is declared
/// 1-Lipschitz.
pub fn lying_pair() -> RegularFamily {
    let e3 = vec![0.0, 0.0, 1.0];
    let top = "1 + abs(3*x1)";
    build(vec![stage(e3.clone(), "0", Some(top), 1.0), stage(e3, top, None, 1.0)])
}

/// The valid families, by name.
pub fn family_catalog() -> Vec<(&'static str, RegularFamily)> {
    vec![
        ("single-plane", single_plane()),
        ("parallel-pair", parallel_pair()),
        ("tilted-planes", tilted_planes()),
        ("cone-pair", cone_pair()),
    ]
}
