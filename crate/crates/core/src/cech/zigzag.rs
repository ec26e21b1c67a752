use std::collections::BTreeMap;

use num_traits::Zero;
use rand::Rng;

use super::{CechCochain, CechError, LocalForm};
use crate::exec::Exec;
use crate::forms::poly::{q_to_f64, Q};
use crate::forms::sample::{random_form, random_rational, FormSpec};
use crate::forms::{NumericForm, PolyForm, Polynomial};
use crate::random::chunk_rng;
use crate::simplicial::{Chain, Cover, Nerve};

#[derive(Clone, Debug)]
pub struct ZigzagOptions {
    /// When set, every rung is modified by a random closed form (exact
    /// forms `dβ`, or constants on 0-form rungs) and numeric constants are
    /// read off at random points of `U_I`.
    pub gauge_seed: Option<u64>,
    /// Total number of residual sample points per rung for numeric forms.
    pub residual_points: usize,
    pub residual_tol: f64,
    /// Points per tuple used to estimate how constant a numeric final
    /// cochain is.
    pub constancy_points: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for ZigzagOptions {
    fn default() -> Self {
        ZigzagOptions {
            gauge_seed: None,
            residual_points: 1000,
            residual_tol: 1e-7,
            constancy_points: 8,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

/// Final cochain of constants `C = δξ^{k−1}` (Cech degree `k`).
#[derive(Clone, Debug)]
pub struct ConstantCochain {
    pub degree: usize,
    /// Exact values when the whole ladder is exact.
    pub exact: Option<BTreeMap<Vec<usize>, Q>>,
    pub values: BTreeMap<Vec<usize>, f64>,
    /// Largest observed deviation from constancy (0 for exact ladders).
    pub spread: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RungDiagnostics {
    pub rung: usize,
    pub tuples: usize,
    pub exact: bool,
    /// Largest sampled `|dξ^s_I − (δξ^{s−1})_I|` (0 when verified exactly).
    pub max_residual: f64,
    /// Sampled `sup |ξ^s| / sup |(δξ^{s−1})|` over the rung.
    pub sup_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct ZigzagState {
    pub k: usize,
    pub ladder: Vec<CechCochain>,
    pub constants: ConstantCochain,
    pub diagnostics: Vec<RungDiagnostics>,
}

fn check_input(w: &LocalForm, cover: &Cover) -> Result<(), CechError> {
    if w.degree() == 0 {
        return Err(CechError::DegreeZero(0));
    }
    let d = cover.complex().ambient_dim();
    if w.n() != d {
        return Err(CechError::AmbientMismatch { form: w.n(), complex: d });
    }
    if let LocalForm::Poly(p) = w {
        if !p.is_closed() {
            return Err(CechError::NotClosed);
        }
    }
    Ok(())
}

/// Random closed form of degree `j` used to perturb a rung.
fn gauge_term<R: Rng + ?Sized>(rng: &mut R, n: usize, j: usize) -> PolyForm {
    let spec = FormSpec {
        max_poly_degree: 2,
        max_terms: 2,
        coeff_range: 3,
        max_den: 2,
        density: 0.8,
    };
    if j == 0 {
        PolyForm::function(n, false, Polynomial::constant(n, random_rational(rng, &spec)))
    } else {
        random_form(rng, n, j - 1, false, &spec).d()
    }
}

/// Solves `dξ_I = η_I` on every tuple by the radial homotopy from the base
/// point of `U_I`.
fn solve_rung(eta: &CechCochain, cover: &Cover, nerve: &Nerve, opts: &ZigzagOptions, rung: usize) -> Result<CechCochain, CechError> {
    let tuples = nerve.simplices(eta.l).to_vec();
    let results = opts.exec.map_slice(&tuples, |tuple| -> Result<LocalForm, CechError> {
        let src = eta.get(tuple)?;
        if src.is_exact_zero() {
            return Ok(LocalForm::zero(eta.n, eta.k - 1));
        }
        Ok(src.radial_homotopy(&cover.base_point(tuple))?)
    });
    let mut out = CechCochain::zero(eta.l, eta.k - 1, eta.n);
    let mut gauge_rng = opts.gauge_seed.map(|s| chunk_rng(s, rung as u64));
    for (tuple, r) in tuples.iter().zip(results) {
        let mut w = r?;
        if let Some(g) = gauge_rng.as_mut() {
            w = w.add(&LocalForm::Poly(gauge_term(g, eta.n, eta.k - 1)))?;
        }
        out.set(tuple, w)?;
    }
    Ok(out)
}

/// Samples `|dξ_I − η_I|` and the sup ratio for one rung.
fn check_rung(
    xi: &CechCochain,
    eta: &CechCochain,
    cover: &Cover,
    nerve: &Nerve,
    opts: &ZigzagOptions,
    rung: usize,
) -> Result<RungDiagnostics, CechError> {
    let tuples = nerve.simplices(xi.l).to_vec();
    let exact = xi.entries().all(|(_, w)| w.is_exact()) && eta.entries().all(|(_, w)| w.is_exact());
    if exact {
        for tuple in &tuples {
            let (LocalForm::Poly(a), LocalForm::Poly(b)) = (xi.get(tuple)?.d(), eta.get(tuple)?) else {
                unreachable!("exact rung")
            };
            if a != b {
                return Err(CechError::Residual {
                    index: tuple.clone(),
                    point: vec![],
                    residual: f64::INFINITY,
                    tol: 0.0,
                });
            }
        }
    }
    let per = if exact {
        16
    } else {
        opts.residual_points.div_ceil(tuples.len().max(1)).max(1)
    };
    let results = opts.exec.map(tuples.len(), |t| -> Result<(f64, f64, f64, Vec<f64>), CechError> {
        let tuple = &tuples[t];
        let mut rng = chunk_rng(opts.seed ^ 0x5eed_0000, (rung as u64) << 32 | t as u64);
        let pts = cover.sample_points(tuple, per, 1e-3, &mut rng);
        let (xv, ev) = (xi.get(tuple)?, eta.get(tuple)?);
        let (mut res, mut sx, mut se) = (0.0f64, 0.0f64, 0.0f64);
        let mut worst = vec![];
        for p in &pts {
            let e = ev.eval(p)?;
            let x = xv.eval(p)?;
            sx = sx.max(x.iter().fold(0.0, |m: f64, v| m.max(v.abs())));
            se = se.max(e.iter().fold(0.0, |m: f64, v| m.max(v.abs())));
            if !exact {
                let dx = xv.d_eval(p)?;
                let r = dx.iter().zip(&e).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                if r > res {
                    res = r;
                    worst = p.clone();
                }
            }
        }
        Ok((res, sx, se, worst))
    });
    let (mut max_res, mut sup_x, mut sup_e) = (0.0f64, 0.0f64, 0.0f64);
    for (t, r) in results.into_iter().enumerate() {
        let (res, sx, se, worst) = r?;
        if res > opts.residual_tol {
            return Err(CechError::Residual {
                index: tuples[t].clone(),
                point: worst,
                residual: res,
                tol: opts.residual_tol,
            });
        }
        max_res = max_res.max(res);
        sup_x = sup_x.max(sx);
        sup_e = sup_e.max(se);
    }
    Ok(RungDiagnostics {
        rung,
        tuples: tuples.len(),
        exact,
        max_residual: max_res,
        sup_ratio: if sup_e > 0.0 { sup_x / sup_e } else { 0.0 },
    })
}

/// The global form `ω` as a Cech 0-cochain (`ω|U_i` on every piece).
fn global_cochain(w: &LocalForm, nerve: &Nerve) -> Result<CechCochain, CechError> {
    let mut c = CechCochain::zero(0, w.degree(), w.n());
    for v in nerve.simplices(0) {
        c.set(v, w.clone())?;
    }
    Ok(c)
}

/// First rung: `ξ⁰_i` with `dξ⁰_i = ω` on `U_i`.
pub fn localize(w: &LocalForm, cover: &Cover, opts: &ZigzagOptions) -> Result<(CechCochain, RungDiagnostics), CechError> {
    check_input(w, cover)?;
    let nerve = cover.nerve();
    let omega = global_cochain(w, &nerve)?;
    let xi0 = solve_rung(&omega, cover, &nerve, opts, 0)?;
    let diag = check_rung(&xi0, &omega, cover, &nerve, opts, 0)?;
    Ok((xi0, diag))
}

/// Runs the ladder `dξ^{s+1} = δξ^s` down to the constants `C = δξ^{k−1}`.
pub fn zigzag(w: &LocalForm, cover: &Cover, opts: &ZigzagOptions) -> Result<ZigzagState, CechError> {
    let k = w.degree();
    let nerve = cover.nerve();
    let (xi0, d0) = localize(w, cover, opts)?;
    let mut ladder = vec![xi0];
    let mut diagnostics = vec![d0];
    for s in 0..k - 1 {
        let eta = ladder[s].delta(&nerve)?;
        let next = solve_rung(&eta, cover, &nerve, opts, s + 1)?;
        diagnostics.push(check_rung(&next, &eta, cover, &nerve, opts, s + 1)?);
        ladder.push(next);
    }
    let last = ladder.last().unwrap().delta(&nerve)?;
    let constants = read_constants(&last, cover, &nerve, opts)?;
    Ok(ZigzagState {
        k,
        ladder,
        constants,
        diagnostics,
    })
}

fn read_constants(c: &CechCochain, cover: &Cover, nerve: &Nerve, opts: &ZigzagOptions) -> Result<ConstantCochain, CechError> {
    let tuples = nerve.simplices(c.l).to_vec();
    let all_exact = tuples.iter().all(|t| c.get(t).map(|w| w.is_exact()).unwrap_or(false));
    if all_exact {
        let mut exact = BTreeMap::new();
        let mut values = BTreeMap::new();
        for t in &tuples {
            let LocalForm::Poly(p) = c.get(t)? else { unreachable!() };
            let v = p
                .component(&[])
                .as_constant()
                .ok_or_else(|| CechError::Unsupported(format!("δξ on {t:?} is not constant: {p}")))?;
            values.insert(t.clone(), q_to_f64(&v));
            if !v.is_zero() {
                exact.insert(t.clone(), v);
            }
        }
        return Ok(ConstantCochain {
            degree: c.l,
            exact: Some(exact),
            values,
            spread: 0.0,
        });
    }
    let results = opts.exec.map(tuples.len(), |i| -> Result<(f64, f64), CechError> {
        let t = &tuples[i];
        let w = c.get(t)?;
        let mut rng = chunk_rng(opts.seed ^ 0xc057, i as u64);
        let mut pts = cover.sample_points(t, opts.constancy_points, 1e-3, &mut rng);
        let base = cover.base_point_f64(t);
        let rep = match opts.gauge_seed {
            Some(_) if !pts.is_empty() => pts[0].clone(),
            _ => base.clone(),
        };
        pts.push(base);
        let v = w.eval(&rep)?[0];
        let mut spread = 0.0f64;
        for p in &pts {
            spread = spread.max((w.eval(p)?[0] - v).abs());
        }
        Ok((v, spread))
    });
    let mut values = BTreeMap::new();
    let mut spread = 0.0f64;
    for (t, r) in tuples.iter().zip(results) {
        let (v, s) = r?;
        values.insert(t.clone(), v);
        spread = spread.max(s);
    }
    Ok(ConstantCochain {
        degree: c.l,
        exact: None,
        values,
        spread,
    })
}

/// Value of the period pairing.
#[derive(Clone, Debug, PartialEq)]
pub struct Period {
    pub value: f64,
    pub exact: Option<Q>,
}

/// `(−1)^{⌊k/2⌋} Σ_I a_I C_I` for a nerve `k`-cycle `c = Σ a_I [I]`.
///
/// For `k = 1` and a cycle traversed as `[i₀i₁] + [i₁i₂] + …`, this equals
/// `−∫ω` along a loop visiting the pieces in that order.
pub fn integrate_over_cycle(state: &ZigzagState, c: &Chain, nerve: &Nerve) -> Result<Period, CechError> {
    if c.is_zero() {
        return Ok(Period {
            value: 0.0,
            exact: Some(Q::zero()),
        });
    }
    match c.dim() {
        Some(d) if d == state.k => {}
        Some(d) => {
            return Err(CechError::ChainDimension {
                expected: state.k,
                found: d,
            })
        }
        None => return Err(CechError::NotACycle),
    }
    if let Some((s, _)) = c.terms().find(|(s, _)| !nerve.contains(s)) {
        return Err(CechError::NotInNerve(s.clone()));
    }
    if !c.is_cycle() {
        return Err(CechError::NotACycle);
    }
    let sign = if (state.k / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let mut value = 0.0;
    for (s, a) in c.terms() {
        value += q_to_f64(a) * state.constants.values.get(s).copied().unwrap_or(0.0);
    }
    let exact = state.constants.exact.as_ref().map(|ex| {
        let mut acc = Q::zero();
        for (s, a) in c.terms() {
            if let Some(v) = ex.get(s) {
                acc += a * v;
            }
        }
        if sign < 0.0 {
            -acc
        } else {
            acc
        }
    });
    Ok(Period {
        value: sign * value,
        exact,
    })
}

/// Convenience: the winding form as a local form.
pub fn winding() -> LocalForm {
    LocalForm::Numeric(NumericForm::winding())
}
