use std::collections::BTreeMap;

use num_traits::Zero;
use rand::Rng;

use super::constants::ConstantSolver;
use super::zigzag::{zigzag, ZigzagOptions};
use super::{CechError, LocalForm};
use crate::forms::norm::{comass, minor};
use crate::forms::{binomial, subsets, PolyForm, Polynomial};
use crate::linalg::Q;
use crate::random::chunk_rng;
use crate::simplicial::{Cover, Nerve, SimplicialComplex};

#[derive(Clone, Debug)]
pub struct PrimitiveOptions {
    pub zigzag: ZigzagOptions,
    /// Exponent of the reported `L^p` norm ratio.
    pub p: f64,
    /// Monte Carlo points per facet for the norm ratio (0 disables it).
    pub norm_samples: usize,
    /// Periods below this count as zero for numeric forms.
    pub period_tol: f64,
    /// Random frames for comass estimates when the degree is not 0, 1, d−1, d.
    pub frame_budget: usize,
    pub seed: u64,
}

impl Default for PrimitiveOptions {
    fn default() -> Self {
        PrimitiveOptions {
            zigzag: ZigzagOptions::default(),
            p: 2.0,
            norm_samples: 256,
            period_tol: 1e-6,
            frame_budget: 200,
            seed: 0,
        }
    }
}

/// A global primitive, given on each facet of the complex.
#[derive(Clone, Debug)]
pub struct GlobalPrimitive {
    pub degree: usize,
    /// `(facet, ξ|facet)`; the representative is an ambient form whose
    /// restriction to the open facet is the primitive.
    pub pieces: Vec<(Vec<usize>, LocalForm)>,
    pub exact: bool,
    /// Largest sampled residual of `dξ = ω` and of the agreement between
    /// local pieces (0 for exact computations).
    pub max_residual: f64,
    pub p: f64,
    /// `‖ξ‖_{L^p} / ‖ω‖_{L^p}` by Monte Carlo over the realization.
    pub norm_ratio: Option<f64>,
}

type FacetForms = BTreeMap<(Vec<usize>, Vec<usize>), PolyForm>;

/// Partition of unity on a facet: `ρ_m` is the sum of the barycentric
/// coordinates of the facet vertices assigned to piece `m` (each vertex goes
/// to the first piece containing it). `ρ_m ≠ 0` on the facet only if the
/// facet lies in `U_m`.
fn partition_of_unity(cover: &Cover, facet: &[usize]) -> Result<BTreeMap<usize, Polynomial>, CechError> {
    let k = cover.complex();
    let lambdas = k.barycentric_functions(facet)?;
    let mut rho: BTreeMap<usize, Polynomial> = BTreeMap::new();
    for (v, lam) in facet.iter().zip(lambdas) {
        let m = cover
            .pieces()
            .iter()
            .position(|p| p.vertices.contains(v))
            .expect("cover contains every vertex");
        let e = rho.entry(m).or_insert_with(|| Polynomial::zero(k.ambient_dim()));
        *e = e.add(&lam);
    }
    Ok(rho)
}

fn sorted_with_sign(m: usize, j: &[usize]) -> Option<(Vec<usize>, bool)> {
    if j.contains(&m) {
        return None;
    }
    let before = j.iter().filter(|&&x| x < m).count();
    let mut t = j.to_vec();
    t.insert(before, m);
    Some((t, before % 2 == 1))
}

/// Global primitive of a closed form with vanishing periods.
///
/// Exact forms of any degree are handled exactly, numeric forms only in
/// degree 1.
pub fn global_primitive(w: &LocalForm, cover: &Cover, opts: &PrimitiveOptions) -> Result<GlobalPrimitive, CechError> {
    let k = w.degree();
    if k == 0 {
        return Err(CechError::DegreeZero(0));
    }
    if !w.is_exact() && k != 1 {
        return Err(CechError::Unsupported(
            "numeric global primitives are only constructed in degree 1".into(),
        ));
    }
    let nerve = cover.nerve();
    let state = zigzag(w, cover, &opts.zigzag)?;
    let solver = ConstantSolver::new(&nerve, k);
    let mut out = match &state.constants.exact {
        Some(c) => {
            let a = solver.solve_exact(c).map_err(|e| CechError::NonzeroPeriod {
                cycle: e.cycle,
                period: e.period,
            })?;
            exact_descent(w, cover, &nerve, &state.ladder, &a)?
        }
        None => {
            let a = solver
                .solve_f64(&state.constants.values, opts.period_tol)
                .map_err(|e| CechError::NonzeroPeriod {
                    cycle: e.cycle,
                    period: e.period,
                })?;
            numeric_degree_one(w, cover, &nerve, &state.ladder[0], &a, opts)?
        }
    };
    out.p = opts.p;
    if opts.norm_samples > 0 {
        out.norm_ratio = Some(norm_ratio(w, &out.pieces, cover.complex(), opts)?);
    }
    Ok(out)
}

fn exact_descent(
    w: &LocalForm,
    cover: &Cover,
    nerve: &Nerve,
    ladder: &[super::CechCochain],
    a: &BTreeMap<Vec<usize>, Q>,
) -> Result<GlobalPrimitive, CechError> {
    let LocalForm::Poly(omega) = w else { unreachable!() };
    let k = omega.degree();
    let n = omega.n();
    let poly = |c: &LocalForm| match c {
        LocalForm::Poly(p) => p.clone(),
        LocalForm::Numeric(_) => unreachable!("exact ladder"),
    };
    let facets_of: BTreeMap<Vec<usize>, Vec<Vec<usize>>> = (0..k)
        .flat_map(|s| nerve.simplices(s).iter().cloned())
        .map(|t| {
            let f = cover.facets_in(&t);
            (t, f)
        })
        .collect();
    let mut rho_cache = BTreeMap::new();
    for f in cover.complex().facets() {
        rho_cache.insert(f.clone(), partition_of_unity(cover, &f)?);
    }

    // η^{k−1} = ξ^{k−1} − a, restricted to facets
    let mut eta: FacetForms = BTreeMap::new();
    for t in nerve.simplices(k - 1) {
        let mut v = poly(&ladder[k - 1].get(t)?);
        if let Some(c) = a.get(t) {
            v = v.sub(&PolyForm::function(n, false, Polynomial::constant(n, c.clone())))?;
        }
        for f in &facets_of[t] {
            eta.insert((t.clone(), f.clone()), v.clone());
        }
    }
    // η^{s−1} = ξ^{s−1} − d(P η^s), with (P η)_J = Σ_m ρ_m η_{mJ}
    for s in (1..k).rev() {
        let mut next: FacetForms = BTreeMap::new();
        for j in nerve.simplices(s - 1) {
            let xi = poly(&ladder[s - 1].get(j)?);
            for f in &facets_of[j] {
                let mut u = PolyForm::zero(n, k - 1 - s, false);
                for (&m, rho) in &rho_cache[f] {
                    let Some((mj, neg)) = sorted_with_sign(m, j) else { continue };
                    let Some(val) = eta.get(&(mj, f.clone())) else { continue };
                    let term = val.mul_function(rho);
                    u = if neg { u.sub(&term)? } else { u.add(&term)? };
                }
                next.insert((j.clone(), f.clone()), xi.sub(&u.d())?);
            }
        }
        eta = next;
    }
    // η⁰_i must agree on every facet
    let mut pieces = Vec::new();
    for f in cover.complex().facets() {
        let mut chosen: Option<PolyForm> = None;
        for (i, _) in cover.pieces().iter().enumerate() {
            if let Some(v) = eta.get(&(vec![i], f.clone())) {
                match &chosen {
                    None => chosen = Some(v.clone()),
                    Some(c) if c != v => return Err(CechError::Inconsistent { facet: f.clone() }),
                    _ => {}
                }
            }
        }
        let xi = chosen.ok_or_else(|| CechError::Inconsistent { facet: f.clone() })?;
        if xi.d() != *omega {
            return Err(CechError::Residual {
                index: f.clone(),
                point: vec![],
                residual: f64::INFINITY,
                tol: 0.0,
            });
        }
        pieces.push((f, LocalForm::Poly(xi)));
    }
    Ok(GlobalPrimitive {
        degree: k - 1,
        pieces,
        exact: true,
        max_residual: 0.0,
        p: 0.0,
        norm_ratio: None,
    })
}

fn numeric_degree_one(
    w: &LocalForm,
    cover: &Cover,
    nerve: &Nerve,
    xi0: &super::CechCochain,
    a: &BTreeMap<Vec<usize>, f64>,
    opts: &PrimitiveOptions,
) -> Result<GlobalPrimitive, CechError> {
    let n = w.n();
    // η⁰_i = ξ⁰_i − a_i
    let mut eta = BTreeMap::new();
    for t in nerve.simplices(0) {
        let c = a.get(t).copied().unwrap_or(0.0);
        let v = xi0.get(t)?.to_numeric()?.combine(1.0, &crate::forms::NumericForm::constant(n, c), -1.0)?;
        eta.insert(t[0], LocalForm::Numeric(v));
    }
    let complex = cover.complex();
    let facets = complex.facets();
    let tol = opts.zigzag.residual_tol.max(opts.period_tol);
    let check = opts.zigzag.exec.map(facets.len(), |fi| -> Result<(Vec<usize>, LocalForm, f64), CechError> {
        let f = &facets[fi];
        let holders: Vec<usize> = (0..cover.len()).filter(|&i| cover.simplex_in(f, &[i])).collect();
        let first = eta[&holders[0]].clone();
        let mut rng = chunk_rng(opts.seed ^ 0x9e3779b9, fi as u64);
        let pts = sample_in_simplex(complex, f, 16, &mut rng);
        let mut worst = 0.0f64;
        for p in &pts {
            let v0 = first.eval(p)?[0];
            for &i in &holders[1..] {
                let r = (eta[&i].eval(p)?[0] - v0).abs();
                worst = worst.max(r);
            }
        }
        if worst > tol {
            return Err(CechError::Inconsistent { facet: f.clone() });
        }
        Ok((f.clone(), first, worst))
    });
    let mut pieces = Vec::new();
    let mut max_residual = 0.0f64;
    for r in check {
        let (f, form, res) = r?;
        max_residual = max_residual.max(res);
        pieces.push((f, form));
    }
    Ok(GlobalPrimitive {
        degree: 0,
        pieces,
        exact: false,
        max_residual,
        p: 0.0,
        norm_ratio: None,
    })
}

/// Uniform random points in the open simplex `s`.
pub fn sample_in_simplex<R: Rng + ?Sized>(k: &SimplicialComplex, s: &[usize], count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let verts: Vec<Vec<f64>> = s.iter().map(|&v| k.vertex_f64(v)).collect();
    let d = k.ambient_dim();
    (0..count)
        .map(|_| {
            let mut e: Vec<f64> = (0..verts.len()).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let tot: f64 = e.iter().sum();
            e.iter_mut().for_each(|x| *x /= tot);
            let mut p = vec![0.0; d];
            for (wi, v) in e.iter().zip(&verts) {
                for (pk, vk) in p.iter_mut().zip(v) {
                    *pk += wi * vk;
                }
            }
            p
        })
        .collect()
}

/// Orthonormal basis of the tangent space of a simplex and its volume.
fn tangent_frame(k: &SimplicialComplex, s: &[usize]) -> (Vec<Vec<f64>>, f64) {
    let v0 = k.vertex_f64(s[0]);
    let mut frame: Vec<Vec<f64>> = Vec::new();
    let mut vol = 1.0;
    for (i, &v) in s[1..].iter().enumerate() {
        let mut e: Vec<f64> = k.vertex_f64(v).iter().zip(&v0).map(|(a, b)| a - b).collect();
        for u in &frame {
            let dot: f64 = e.iter().zip(u).map(|(a, b)| a * b).sum();
            e.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = e.iter().map(|a| a * a).sum::<f64>().sqrt();
        vol *= norm / (i + 1) as f64;
        frame.push(e.into_iter().map(|a| a / norm).collect());
    }
    (frame, vol)
}

/// Coefficients of the restriction of an ambient form to the span of an
/// orthonormal frame.
fn restrict(coeffs: &[f64], n: usize, k: usize, frame: &[Vec<f64>]) -> Vec<f64> {
    let d = frame.len();
    let in_sets = subsets(n, k);
    subsets(d, k)
        .iter()
        .map(|sel| {
            let rows: Vec<Vec<f64>> = sel.iter().map(|&r| frame[r].clone()).collect();
            in_sets
                .iter()
                .zip(coeffs)
                .filter(|(_, c)| **c != 0.0)
                .map(|(set, c)| c * minor(&rows, set))
                .sum()
        })
        .collect()
}

fn norm_ratio(w: &LocalForm, pieces: &[(Vec<usize>, LocalForm)], k: &SimplicialComplex, opts: &PrimitiveOptions) -> Result<f64, CechError> {
    let n = k.ambient_dim();
    let p = opts.p;
    let results = opts.zigzag.exec.map(pieces.len(), |i| -> Result<(f64, f64), CechError> {
        let (f, xi) = &pieces[i];
        let (frame, vol) = tangent_frame(k, f);
        let d = frame.len();
        let mut rng = chunk_rng(opts.seed ^ 0x4c50, i as u64);
        let pts = sample_in_simplex(k, f, opts.norm_samples, &mut rng);
        let (mut sx, mut sw) = (0.0, 0.0);
        for x in &pts {
            let pair = [(xi, &mut sx), (w, &mut sw)];
            for (form, acc) in pair {
                let deg = form.degree();
                if deg > d {
                    continue;
                }
                let c = restrict(&form.eval(x)?, n, deg, &frame);
                debug_assert_eq!(c.len(), binomial(d, deg));
                let v = comass(&c, d, deg, opts.frame_budget, &mut rng).value;
                *acc += v.powf(p);
            }
        }
        let m = pts.len().max(1) as f64;
        Ok((vol * sx / m, vol * sw / m))
    });
    let (mut ix, mut iw) = (0.0, 0.0);
    for r in results {
        let (a, b) = r?;
        ix += a;
        iw += b;
    }
    if iw.is_zero() {
        return Ok(0.0);
    }
    Ok((ix / iw).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::simplicial::star_cover;

    #[test]
    fn area_form_on_disk() {
        let w = LocalForm::Poly(PolyForm::dx(2, false, 0).wedge(&PolyForm::dx(2, false, 1)).unwrap());
        let cover = star_cover(catalog::disk());
        let g = global_primitive(&w, &cover, &PrimitiveOptions::default()).unwrap();
        assert!(g.exact);
        assert_eq!(g.pieces.len(), 6);
        for (_, xi) in &g.pieces {
            let LocalForm::Poly(x) = xi else { panic!() };
            assert_eq!(x.d(), PolyForm::dx(2, false, 0).wedge(&PolyForm::dx(2, false, 1)).unwrap());
        }
        assert!(g.norm_ratio.unwrap() > 0.0);
    }

    #[test]
    fn winding_refused_with_cycle() {
        let cover = star_cover(catalog::annulus());
        let err = global_primitive(&super::super::zigzag::winding(), &cover, &PrimitiveOptions::default()).unwrap_err();
        match err {
            CechError::NonzeroPeriod { cycle, period } => {
                assert!(cycle.is_cycle());
                assert!((period.abs() - 2.0 * std::f64::consts::PI).abs() < 1e-6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_form() {
        let cover = star_cover(catalog::disk());
        let g = global_primitive(&LocalForm::zero(2, 2), &cover, &PrimitiveOptions::default()).unwrap();
        assert!(g.pieces.iter().all(|(_, x)| x.is_exact_zero()));
        assert_eq!(g.norm_ratio, Some(0.0));
    }

    #[test]
    fn exact_numeric_one_form() {
        let x = Polynomial::var(2, 0);
        let f = PolyForm::function(2, false, x.mul(&x));
        let df = LocalForm::Numeric(crate::forms::NumericForm::from_poly(&f.d()).unwrap());
        let cover = star_cover(catalog::annulus());
        let g = global_primitive(&df, &cover, &PrimitiveOptions::default()).unwrap();
        assert!(!g.exact);
        assert!(g.max_residual < 1e-8);
    }
}
