use macdmt_core::MacConfig;
use macdmt_scheme::{effective_structure, stack_patterns};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{noise_variance, sample_channel};
use crate::McError;

/// Largest total real lattice dimension the exhaustive decoder accepts.
pub const MAX_REAL_DIM: usize = 16;
const NODE_LIMIT: u64 = 2_000_000;

/// Random per-user lattice: a Gaussian generator rescaled so that its Voronoi
/// volume is `ρ^{−r·T}`.
#[derive(Debug, Clone)]
pub struct LatticeSpec {
    pub dim: usize,
    pub generator: DMatrix<f64>,
}

impl LatticeSpec {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize, log_volume: f64) -> Self {
        loop {
            let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            let det = g.clone().lu().determinant().abs();
            if det > 1e-9 {
                let scale = ((log_volume - det.ln()) / dim as f64).exp();
                return Self { dim, generator: g * scale };
            }
        }
    }

    pub fn volume(&self) -> f64 {
        self.generator.clone().lu().determinant().abs()
    }
}

/// Nearest lattice point to `y` for generator `b` (columns are basis vectors),
/// by Schnorr–Euchner enumeration after a QR factorization. The search radius
/// starts at `radius` and doubles until some point is found. Returns `None`
/// for a numerically singular basis or when the node budget runs out.
pub fn closest_point(b: &DMatrix<f64>, y: &DVector<f64>, radius: f64) -> Option<Vec<i64>> {
    let d = b.ncols();
    let qr = b.clone().qr();
    let r = qr.r();
    let z = qr.q().transpose() * y;
    let scale = (0..d).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..d).any(|i| r[(i, i)].abs() <= 1e-12 * scale.max(1e-300)) {
        return None;
    }
    let mut rad2 = radius * radius;
    let mut nodes = 0u64;
    loop {
        let mut best: Option<(f64, Vec<i64>)> = None;
        let mut u = vec![0i64; d];
        search(&r, &z, d, 0.0, &mut u, &mut rad2, &mut best, &mut nodes);
        if nodes > NODE_LIMIT {
            return None;
        }
        if let Some((_, p)) = best {
            return Some(p);
        }
        rad2 *= 4.0;
    }
}

#[allow(clippy::too_many_arguments)]
fn search(
    r: &DMatrix<f64>,
    z: &DVector<f64>,
    level: usize,
    partial: f64,
    u: &mut [i64],
    rad2: &mut f64,
    best: &mut Option<(f64, Vec<i64>)>,
    nodes: &mut u64,
) {
    if level == 0 {
        if best.as_ref().is_none_or(|b| partial < b.0) {
            *best = Some((partial, u.to_vec()));
            *rad2 = partial;
        }
        return;
    }
    let i = level - 1;
    let d = u.len();
    let mut acc = z[i];
    for j in level..d {
        acc -= r[(i, j)] * u[j] as f64;
    }
    let rii = r[(i, i)];
    let centre = acc / rii;
    let first = centre.round();
    // walk outwards from the nearest integer; the cost is convex in the
    // offset, so each side stops at its first point outside the radius
    let (mut up_open, mut down_open) = (true, true);
    for k in 0i64.. {
        let sides: &[f64] = if k == 0 { &[0.0] } else { &[1.0, -1.0] };
        for &sgn in sides {
            if (sgn > 0.0 && !up_open) || (sgn < 0.0 && !down_open) {
                continue;
            }
            *nodes += 1;
            if *nodes > NODE_LIMIT {
                return;
            }
            let cand = first + sgn * k as f64;
            let diff = rii * (cand - centre);
            let p = partial + diff * diff;
            if p > *rad2 {
                if k == 0 {
                    return;
                }
                if sgn > 0.0 {
                    up_open = false;
                } else {
                    down_open = false;
                }
            } else {
                u[i] = cand as i64;
                search(r, z, i, p, u, rad2, best, nodes);
            }
        }
        if !up_open && !down_open {
            return;
        }
    }
}

/// One zero-codeword trial of regular lattice decoding at level `l`: draw a
/// channel and per-user lattices, add noise, decode to the nearest point of
/// the received lattice. Returns `true` on a decoding error.
pub fn lattice_decode_trial<R: Rng + ?Sized>(
    cfg: &MacConfig,
    l: usize,
    rates: &[f64],
    rho: f64,
    rng: &mut R,
) -> Result<bool, McError> {
    if cfg.m > cfg.n || l >= cfg.m {
        return Err(McError::Config(format!("need M ≤ N and l < M ({cfg}, l={l})")));
    }
    let per_user = cfg.m * cfg.n - l * (l + 1);
    let t = cfg.n + cfg.m - 1 - 2 * l;
    let d = 2 * cfg.k * per_user;
    if d > MAX_REAL_DIM {
        return Err(McError::Config(format!("real lattice dimension {d} exceeds {MAX_REAL_DIM}")));
    }
    if rates.len() != cfg.k {
        return Err(McError::Config(format!("expected {} rates", cfg.k)));
    }
    let eff = effective_structure(&stack_patterns(cfg, l, cfg.k)?);
    let h = sample_channel(cfg, rng);
    let lattices: Vec<LatticeSpec> = rates
        .iter()
        .map(|r| LatticeSpec::random(rng, 2 * per_user, -r * t as f64 * rho.ln()))
        .collect();

    let a = eff.assemble(&h);
    let rows = a.rows();
    let owners = eff.column_users();
    let mut user_cols: Vec<Vec<usize>> = vec![Vec::new(); cfg.k];
    for (c, &u) in owners.iter().enumerate() {
        user_cols[u].push(c);
    }
    // real form: [Re; Im] rows, columns split into real and imaginary inputs
    let re_col = |c: usize| DVector::from_fn(2 * rows, |i, _| if i < rows { a.get(i, c).re } else { a.get(i - rows, c).im });
    let im_col = |c: usize| DVector::from_fn(2 * rows, |i, _| if i < rows { -a.get(i, c).im } else { a.get(i - rows, c).re });
    let mut b = DMatrix::<f64>::zeros(2 * rows, d);
    for (u, cols) in user_cols.iter().enumerate() {
        let g = &lattices[u].generator;
        for p in 0..2 * per_user {
            let mut col = DVector::<f64>::zeros(2 * rows);
            for (q, &c) in cols.iter().enumerate() {
                col += re_col(c) * g[(q, p)] + im_col(c) * g[(per_user + q, p)];
            }
            b.set_column(u * 2 * per_user + p, &col);
        }
    }
    let sigma = noise_variance(rho).sqrt();
    let w = DVector::from_fn(2 * rows, |_, _| sigma * rng.sample::<f64, _>(StandardNormal));
    let radius = 1.5 * sigma * (d as f64).sqrt();
    Ok(match closest_point(&b, &w, radius) {
        Some(p) => p.iter().any(|&x| x != 0),
        None => true,
    })
}
