use std::collections::HashMap;

use rand::Rng;
use serde::Serialize;

use super::cone::transfer_aperture;
use super::family::{RegularFamily, SampleCheck, VerifySpec};
use super::{dist, lifted_axis, norm, Cone, FlattenError};
use crate::exec::{chunks, Exec};
use crate::random::{chunk_rng, in_box, CHUNK};

/// Width of the band around a region boundary inside which a point is
/// assigned to the lower stage.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// A point judged to lie in `E(H_{k+1}; λ_{k+1})` but above the graph of
/// `ζ'_k` by more than this is reported as ambiguous.
const AMBIGUITY_TOL: f64 = 1e-6;

/// Relative margin added to sampled Lipschitz constants of stage functions.
const ETA_MARGIN: f64 = 0.05;

/// The flattening map of a regular family, evaluated stage by stage.
///
/// Below `H_1` it is the isometry `q ↦ (x_{λ₁}(q); q·λ₁)`. Between `H_k`
/// and `H_{k+1}` (and above the last hypersurface, with `k = b`) it is
/// `q ↦ h(π_{H_k} q) + (q·λ_k − ζ_k(x_{λ_k} q)) e_{n+1}`.
#[derive(Clone, Debug)]
pub struct FlatteningMap {
    family: RegularFamily,
    tol: f64,
}

pub fn build_flattening(family: RegularFamily) -> FlatteningMap {
    FlatteningMap { family, tol: BOUNDARY_TOL }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerticalLineReport {
    pub stage: usize,
    pub points: usize,
    /// `max |z_{n+1} − η_k(z')|` over images of grid points of `H_k`.
    pub graph_residual: f64,
    /// Pairs of images over the same base point with different heights.
    pub collisions: usize,
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundTrip {
    pub samples: usize,
    pub max_error: f64,
    pub witness: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MapReport {
    pub round_trip: RoundTrip,
    /// `h(E(H_k; λ_k)) ⊂ E(F_k; e_{n+1})` on samples.
    pub regions: SampleCheck,
    /// Largest `|h(p + δλ_k) − h(p − δλ_k)| / δ` for `p ∈ H_k`, `δ = 10⁻⁷`.
    pub boundary_jump: f64,
    pub vertical: Vec<VerticalLineReport>,
}

impl MapReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.round_trip.max_error <= tol && self.regions.passed() && self.boundary_jump.is_finite() && self.vertical.iter().all(|v| v.passed)
    }
}

impl FlatteningMap {
    pub fn family(&self) -> &RegularFamily {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.family.ambient_dim()
    }

    /// `q·λ_k − ζ_k(x_{λ_k} q)`; `q ∈ E(H_k; λ_k)` when this is at most the
    /// boundary tolerance.
    fn above(&self, k: usize, q: &[f64]) -> Result<f64, FlattenError> {
        let s = &self.family.stages[k];
        Ok(s.height(q) - s.zeta.eval(&s.coords(q))?)
    }

    /// Smallest `k` with `q ∈ E(H_k; λ_k)`, or the number of stages.
    pub fn stage_of(&self, q: &[f64]) -> Result<usize, FlattenError> {
        for k in 0..self.family.len() {
            if self.above(k, q)? <= self.tol {
                return Ok(k);
            }
        }
        Ok(self.family.len())
    }

    fn check_dim(&self, q: &[f64]) -> Result<(), FlattenError> {
        if q.len() == self.dim() {
            Ok(())
        } else {
            Err(FlattenError::Dimension)
        }
    }

    pub fn eval(&self, q: &[f64]) -> Result<Vec<f64>, FlattenError> {
        self.check_dim(q)?;
        self.eval_capped(q, self.family.len())
    }

    fn eval_capped(&self, q: &[f64], cap: usize) -> Result<Vec<f64>, FlattenError> {
        let idx = self.stage_of(q)?.min(cap);
        if idx == 0 {
            let s = &self.family.stages[0];
            let mut z = s.coords(q);
            z.push(s.height(q));
            return Ok(z);
        }
        let k = idx - 1;
        let s = &self.family.stages[k];
        let x = s.coords(q);
        let base = s.zeta.eval(&x)?;
        let shift = s.height(q) - base;
        if let Some(zp) = &s.zeta_prime {
            if idx < self.family.len() && shift > zp.eval(&x)? - base + AMBIGUITY_TOL {
                return Err(FlattenError::Ambiguous { point: q.to_vec(), stage: k });
            }
        }
        let mut z = self.eval_capped(&s.point(&x, base), k)?;
        *z.last_mut().expect("nonempty") += shift;
        Ok(z)
    }

    /// `η_0, …, η_{upto−1}` at the base point `z'`, stopping early once
    /// `stop(η_k)` holds. Returns the computed values.
    fn etas(&self, zb: &[f64], upto: usize, stop: impl Fn(f64) -> bool) -> Result<Vec<f64>, FlattenError> {
        let mut out = Vec::with_capacity(upto);
        if upto == 0 {
            return Ok(out);
        }
        let mut eta = self.family.stages[0].zeta.eval(zb)?;
        out.push(eta);
        for k in 0..upto - 1 {
            if stop(eta) {
                break;
            }
            let s = &self.family.stages[k];
            let zp = s.zeta_prime.as_ref().expect("inner stages carry zeta_prime");
            let mut z = zb.to_vec();
            z.push(eta);
            let p = self.inverse_capped(&z, k)?;
            let x = s.coords(&p);
            eta += zp.eval(&x)? - s.zeta.eval(&x)?;
            out.push(eta);
        }
        Ok(out)
    }

    /// `η_k(z')`, the function whose graph is `F_k = h(H_k)`.
    pub fn eta(&self, k: usize, zb: &[f64]) -> Result<f64, FlattenError> {
        if k >= self.family.len() || zb.len() + 1 != self.dim() {
            return Err(FlattenError::Dimension);
        }
        Ok(*self.etas(zb, k + 1, |_| false)?.last().expect("k + 1 values"))
    }

    pub fn inverse(&self, z: &[f64]) -> Result<Vec<f64>, FlattenError> {
        self.check_dim(z)?;
        self.inverse_capped(z, self.family.len())
    }

    fn inverse_capped(&self, z: &[f64], cap: usize) -> Result<Vec<f64>, FlattenError> {
        let n = z.len() - 1;
        let (zb, top) = (&z[..n], z[n]);
        let tol = self.tol;
        let etas = self.etas(zb, cap, |e| top <= e + tol)?;
        let idx = etas.iter().position(|e| top <= e + tol).unwrap_or(cap);
        if idx == 0 {
            return Ok(self.family.stages[0].point(zb, top));
        }
        let k = idx - 1;
        let mut on = zb.to_vec();
        on.push(etas[k]);
        let mut q = self.inverse_capped(&on, k)?;
        let shift = top - etas[k];
        q.iter_mut().zip(&self.family.stages[k].lambda).for_each(|(a, l)| *a += shift * l);
        Ok(q)
    }

    /// Images of a `grid`ⁿ grid of `H_k` over `[−radius, radius]ⁿ` in the
    /// coordinates of `N_{λ_k}`, tested for being a graph over the first `n`
    /// image coordinates.
    pub fn vertical_line_test(&self, k: usize, grid: usize, radius: f64, exec: Exec) -> Result<VerticalLineReport, FlattenError> {
        let n = self.dim() - 1;
        let s = &self.family.stages[k];
        let total = grid.pow(n as u32);
        let step = 2.0 * radius / (grid.max(2) - 1) as f64;
        let images = exec.map(total, |i| -> Result<(Vec<f64>, f64), FlattenError> {
            let mut rest = i;
            let x: Vec<f64> = (0..n)
                .map(|_| {
                    let j = rest % grid;
                    rest /= grid;
                    -radius + step * j as f64
                })
                .collect();
            let p = s.point(&x, s.zeta.eval(&x)?);
            let z = self.eval(&p)?;
            let res = (z[n] - self.eta(k, &z[..n])?).abs();
            Ok((z, res))
        });
        let mut pts = Vec::with_capacity(total);
        let mut graph_residual = 0.0f64;
        for im in images {
            let (z, r) = im?;
            graph_residual = graph_residual.max(r);
            pts.push(z);
        }
        // bucket on the base coordinates; two images over one base point
        // must have the same height
        let cell = 1e-7;
        let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, z) in pts.iter().enumerate() {
            buckets.entry(z[..n].iter().map(|v| (v / cell).round() as i64).collect()).or_default().push(i);
        }
        let mut collisions = 0;
        let mut witness = None;
        for ids in buckets.values() {
            for (a, &i) in ids.iter().enumerate() {
                for &j in &ids[a + 1..] {
                    let (zi, zj) = (&pts[i], &pts[j]);
                    if dist(&zi[..n], &zj[..n]) <= self.tol && (zi[n] - zj[n]).abs() > 1e3 * self.tol {
                        collisions += 1;
                        witness.get_or_insert_with(|| (zi.clone(), zj.clone()));
                    }
                }
            }
        }
        Ok(VerticalLineReport {
            stage: k,
            points: total,
            graph_residual,
            collisions,
            witness,
            passed: collisions == 0 && graph_residual <= 1e3 * self.tol,
        })
    }

    /// Round trip, region preservation, boundary continuity and the
    /// vertical-line test of every stage on a `grid`ⁿ grid.
    pub fn verify(&self, spec: &VerifySpec, grid: usize, exec: Exec) -> Result<MapReport, FlattenError> {
        let n1 = self.dim();
        let lo = vec![-spec.radius; n1];
        let hi = vec![spec.radius; n1];
        let b = self.family.len();
        type Part = (f64, Option<Vec<f64>>, usize, Option<Vec<f64>>, f64);
        let parts = exec.map_slice(&chunks(spec.samples, CHUNK), |&(start, len)| -> Result<Part, FlattenError> {
            let mut rng = chunk_rng(spec.seed, (start / CHUNK) as u64);
            let mut out: Part = (0.0, None, 0, None, 0.0);
            for _ in 0..len {
                let q = in_box(&mut rng, &lo, &hi);
                let z = self.eval(&q)?;
                let back = self.inverse(&z)?;
                let err = dist(&back, &q);
                if err > out.0 {
                    out.0 = err;
                    out.1 = Some(q.clone());
                }
                for k in 0..b {
                    if self.above(k, &q)? <= -spec.tol && z[n1 - 1] > self.eta(k, &z[..n1 - 1])? + spec.tol {
                        out.2 += 1;
                        out.3.get_or_insert_with(|| q.clone());
                    }
                }
                let k = rng.random_range(0..b);
                let s = &self.family.stages[k];
                let x = s.coords(&q);
                let p = s.point(&x, s.zeta.eval(&x)?);
                let delta = 1e-7;
                let up: Vec<f64> = p.iter().zip(&s.lambda).map(|(a, l)| a + delta * l).collect();
                let down: Vec<f64> = p.iter().zip(&s.lambda).map(|(a, l)| a - delta * l).collect();
                out.4 = out.4.max(dist(&self.eval(&up)?, &self.eval(&down)?) / delta);
            }
            Ok(out)
        });
        let mut round_trip = RoundTrip {
            samples: spec.samples,
            max_error: 0.0,
            witness: None,
        };
        let mut regions = SampleCheck {
            samples: spec.samples,
            violations: 0,
            witness: None,
        };
        let mut boundary_jump = 0.0f64;
        for p in parts {
            let (e, w, v, rw, j) = p?;
            if e > round_trip.max_error {
                round_trip.max_error = e;
                round_trip.witness = w;
            }
            regions.violations += v;
            if regions.witness.is_none() {
                regions.witness = rw;
            }
            boundary_jump = boundary_jump.max(j);
        }
        let vertical = (0..b).map(|k| self.vertical_line_test(k, grid, spec.radius, exec)).collect::<Result<_, _>>()?;
        Ok(MapReport {
            round_trip,
            regions,
            boundary_jump,
            vertical,
        })
    }

    /// Sampled Lipschitz quotient of `η_k` over the base box, inflated by a
    /// small margin. Exact for `η_0 = ζ_0`, whose constant is declared.
    fn eta_lipschitz(&self, k: usize, spec: &VerifySpec, exec: Exec) -> Result<f64, FlattenError> {
        if k == 0 {
            return Ok(self.family.stages[0].zeta.lipschitz);
        }
        let n = self.dim() - 1;
        let lo = vec![-spec.radius; n];
        let hi = vec![spec.radius; n];
        let parts = exec.map_slice(&chunks(spec.samples, CHUNK), |&(start, len)| -> Result<f64, FlattenError> {
            let mut rng = chunk_rng(spec.seed ^ 0x5eed, (start / CHUNK) as u64);
            let mut best = 0.0f64;
            for i in 0..len {
                let a = in_box(&mut rng, &lo, &hi);
                let c = if i % 2 == 0 {
                    in_box(&mut rng, &lo, &hi)
                } else {
                    a.iter().map(|v| v + 1e-4 * spec.radius * (2.0 * rng.random::<f64>() - 1.0)).collect()
                };
                let d = dist(&a, &c);
                if d > 0.0 {
                    best = best.max((self.eta(k, &a)? - self.eta(k, &c)?).abs() / d);
                }
            }
            Ok(best)
        });
        let sampled = parts.into_iter().try_fold(0.0f64, |m, v| Ok::<_, FlattenError>(m.max(v?)))?;
        Ok(sampled * (1.0 + ETA_MARGIN))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BilipschitzReport {
    pub c1: f64,
    pub c2: f64,
    pub pairs: usize,
    /// `c₁ < 10⁻⁹`.
    pub degenerate: bool,
}

/// Smallest and largest `|h(p) − h(q)| / |p − q|` over sampled pairs in the
/// box; half of the pairs are close.
pub fn bilipschitz_estimate(h: &FlatteningMap, spec: &VerifySpec, exec: Exec) -> Result<BilipschitzReport, FlattenError> {
    let n1 = h.dim();
    let lo = vec![-spec.radius; n1];
    let hi = vec![spec.radius; n1];
    let parts = exec.map_slice(&chunks(spec.samples, CHUNK), |&(start, len)| -> Result<(f64, f64), FlattenError> {
        let mut rng = chunk_rng(spec.seed, (start / CHUNK) as u64);
        let mut acc = (f64::INFINITY, 0.0f64);
        for i in 0..len {
            let p = in_box(&mut rng, &lo, &hi);
            let q: Vec<f64> = if i % 2 == 0 {
                in_box(&mut rng, &lo, &hi)
            } else {
                p.iter().map(|v| v + 1e-3 * spec.radius * (2.0 * rng.random::<f64>() - 1.0)).collect()
            };
            let d = dist(&p, &q);
            if d == 0.0 {
                continue;
            }
            let r = dist(&h.eval(&p)?, &h.eval(&q)?) / d;
            acc = (acc.0.min(r), acc.1.max(r));
        }
        Ok(acc)
    });
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0f64;
    for p in parts {
        let (a, b) = p?;
        c1 = c1.min(a);
        c2 = c2.max(b);
    }
    Ok(BilipschitzReport {
        c1,
        c2,
        pairs: spec.samples,
        degenerate: c1 < 1e-9,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageAperture {
    pub stage: usize,
    /// Aperture of the cone around `e₁` containing the base projection of
    /// `h(A ∩ H_k)`, after the transfers and graph steps down to `H_1`.
    pub chain: f64,
    /// Lipschitz constant used for `η_k`.
    pub eta_lipschitz: f64,
    /// `chain / (1 + eta_lipschitz)`.
    pub aperture: f64,
    pub vacuous: bool,
    pub samples: usize,
    pub violations: usize,
    pub witness: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlattenConeReport {
    pub input_aperture: f64,
    /// Smallest stage aperture: `h(A) ⊂ C_{n+1}(e₁, aperture)`.
    pub aperture: f64,
    pub stages: Vec<StageAperture>,
    /// `h(0) = 0`, so the apex of `A` maps to the apex.
    pub origin_fixed: bool,
    pub violating_stage: Option<usize>,
}

impl FlattenConeReport {
    pub fn passed(&self) -> bool {
        self.origin_fixed && self.violating_stage.is_none()
    }
}

/// Explicit aperture for `h(A)` when `A ⊂ ∪H_k ∩ C_{n+1}(e₁, M)`.
///
/// For `A ∩ H_k` the base part of `h` is `x_{λ₁} ∘ π_{H_1} ∘ ⋯ ∘ π_{H_{k−1}}`.
/// Each projection first moves the cone axis into `N_{λ_j}` (the tilted
/// inclusion from `e₁`, then `(M − |v − u|)/|v|` between tilted axes) and
/// then divides by `1 + L_j` for the graph of `ζ_j`. The image is the graph
/// of `η_k` over that base cone, which costs a last factor `1 + L(η_k)`.
/// `A` is sampled as projections onto `H_k` of points of the input cone that
/// stay inside it.
pub fn flatten_cone_check(h: &FlatteningMap, m: f64, spec: &VerifySpec, exec: Exec) -> Result<FlattenConeReport, FlattenError> {
    let n1 = h.dim();
    let fam = h.family();
    let input = Cone::e1(n1, m)?;
    let origin = vec![0.0; n1];
    for s in &fam.stages {
        let v = s.zeta.eval(&origin[..n1 - 1])?;
        if v.abs() > spec.tol {
            return Err(FlattenError::NotThroughOrigin(v));
        }
    }
    let origin_fixed = norm(&h.eval(&origin)?) <= spec.tol;
    let mut stages = Vec::with_capacity(fam.len());
    for k in 0..fam.len() {
        let top = if k == 0 { 0 } else { k - 1 };
        let lam = &fam.stages[top].lambda;
        let (v, _) = lifted_axis(lam)?;
        let eps = (1.0 - lam[n1 - 1]).max(0.0);
        let vn = norm(&v);
        let mut chain = (m - (2.0 * eps).sqrt() / (1.0 - eps)) / vn;
        let mut axis: Vec<f64> = v.iter().map(|a| a / vn).collect();
        if k > 0 {
            chain /= 1.0 + fam.stages[k - 1].zeta.lipschitz;
            for j in (0..k - 1).rev() {
                let (v, _) = lifted_axis(&fam.stages[j].lambda)?;
                chain = transfer_aperture(&axis, &v, chain) / (1.0 + fam.stages[j].zeta.lipschitz);
                let vn = norm(&v);
                axis = v.iter().map(|a| a / vn).collect();
            }
        }
        let eta_lipschitz = h.eta_lipschitz(k, spec, exec)?;
        let aperture = chain / (1.0 + eta_lipschitz);
        if aperture <= 0.0 {
            stages.push(StageAperture {
                stage: k,
                chain,
                eta_lipschitz,
                aperture,
                vacuous: true,
                samples: 0,
                violations: 0,
                witness: None,
            });
            continue;
        }
        let target = Cone::e1(n1, aperture)?;
        let s = &fam.stages[k];
        let parts = exec.map_slice(&chunks(spec.samples, CHUNK), |&(start, len)| -> Result<(usize, usize, Option<Vec<f64>>), FlattenError> {
            let mut rng = chunk_rng(spec.seed ^ (k as u64 + 1).wrapping_mul(0x9e37_79b9), (start / CHUNK) as u64);
            let (mut got, mut bad, mut first) = (0, 0, None);
            for _ in 0..100 * len {
                if got == len {
                    break;
                }
                let p = s.project(&input.sample(&mut rng))?;
                if !input.contains(&p) {
                    continue;
                }
                got += 1;
                if !target.contains(&h.eval(&p)?) {
                    bad += 1;
                    first.get_or_insert(p);
                }
            }
            Ok((got, bad, first))
        });
        let mut st = StageAperture {
            stage: k,
            chain,
            eta_lipschitz,
            aperture,
            vacuous: false,
            samples: 0,
            violations: 0,
            witness: None,
        };
        for p in parts {
            let (g, b, w) = p?;
            st.samples += g;
            st.violations += b;
            if st.witness.is_none() {
                st.witness = w;
            }
        }
        stages.push(st);
    }
    let aperture = stages.iter().map(|s| s.aperture).fold(f64::INFINITY, f64::min);
    let violating_stage = stages.iter().find(|s| s.violations > 0).map(|s| s.stage);
    Ok(FlattenConeReport {
        input_aperture: m,
        aperture,
        stages,
        origin_fixed,
        violating_stage,
    })
}

#[cfg(test)]
mod tests {
    use super::super::catalog::*;
    use super::*;

    fn quick() -> VerifySpec {
        VerifySpec {
            samples: 2000,
            ..VerifySpec::default()
        }
    }

    #[test]
    fn single_plane_is_an_isometry() {
        let h = build_flattening(single_plane());
        let lam = h.family().stages[0].lambda.clone();
        let q = [0.3, -0.2, 0.5];
        let z = h.eval(&q).unwrap();
        assert!((norm(&z) - norm(&q)).abs() < 1e-15);
        assert!((z[2] - super::super::dot(&q, &lam)).abs() < 1e-15);
        let b = bilipschitz_estimate(&h, &quick(), Exec::Parallel).unwrap();
        assert!((b.c1 - 1.0).abs() < 1e-9 && (b.c2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn parallel_pair_is_identity() {
        let h = build_flattening(parallel_pair());
        for q in [[0.1, 0.2, -0.5], [0.3, -0.4, 0.5], [0.0, 0.9, 1.7]] {
            let z = h.eval(&q).unwrap();
            assert!(dist(&z, &q) < 1e-15, "{z:?}");
        }
        for x in [[0.0, 0.0], [0.7, -0.3]] {
            assert!((h.eta(1, &x).unwrap() - h.eta(0, &x).unwrap() - 1.0).abs() < 1e-15);
        }
        let b = bilipschitz_estimate(&h, &quick(), Exec::Sequential).unwrap();
        assert!((b.c1 - 1.0).abs() < 1e-9 && (b.c2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tilted_planes_verify() {
        let h = build_flattening(tilted_planes());
        let rep = h.verify(&quick(), 16, Exec::Parallel).unwrap();
        assert!(rep.passed(1e-9), "{rep:?}");
        assert!(rep.boundary_jump < 10.0);
    }

    #[test]
    fn cone_pair_apertures() {
        let h = build_flattening(cone_pair());
        let rep = flatten_cone_check(&h, 0.9, &quick(), Exec::Parallel).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.stages.iter().all(|s| s.samples > 1000 && !s.vacuous));
        let lam = &h.family().stages[0].lambda;
        let eps = 1.0 - lam[2];
        let (v, _) = lifted_axis(lam).unwrap();
        let m2 = (0.9 - (2.0 * eps).sqrt() / (1.0 - eps)) / norm(&v);
        assert!((rep.stages[0].aperture - m2 / (1.0 + h.family().stages[0].zeta.lipschitz)).abs() < 1e-15);
    }

    #[test]
    fn ambiguity_is_reported() {
        // E(H_2) via ζ_2 is strictly larger than via ζ'_1
        let f = RegularFamily::from_json(r#"[{"lambda":[0,1],"zeta":"0","zeta_prime":"1","L":0},{"lambda":[0,1],"zeta":"2","L":0}]"#).unwrap();
        let h = build_flattening(f);
        assert!(matches!(h.eval(&[0.0, 1.5]), Err(FlattenError::Ambiguous { stage: 0, .. })));
    }
}
