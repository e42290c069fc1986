#![allow(dead_code)]

use ctxrank::{Grid, PairIndex, PolicyState, PosteriorGrid, PriorSpec, VarianceMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random posterior state: uninformative prior, 2 to 7 noisy samples per pair.
pub fn random_state(
    g: &mut ChaCha8Rng,
    k: usize,
    q: usize,
    m: usize,
    mode: VarianceMode,
) -> PolicyState {
    let s2 = Grid::from_fn(k, q, |_, _| g.random_range(0.5..4.0));
    let mut grid =
        PosteriorGrid::with_sampling_var(&PriorSpec::Uninformative, s2.clone(), mode, 2).unwrap();
    for i in 0..k {
        for l in 0..q {
            let mu: f64 = g.random_range(-3.0..3.0);
            let n = Normal::new(mu, s2[(i, l)].sqrt()).unwrap();
            for _ in 0..g.random_range(2..8) {
                grid.update_one(PairIndex::new(i, l), n.sample(g)).unwrap();
            }
        }
    }
    PolicyState::new(grid, vec![m; q]).unwrap()
}

/// Exhaustive double loop over every top/rest split of the posterior ranking.
pub fn apcs_brute(grid: &PosteriorGrid, l: usize, m: usize) -> f64 {
    let k = grid.k();
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| {
        grid.mean[(b, l)]
            .partial_cmp(&grid.mean[(a, l)])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut best = f64::INFINITY;
    for &i in &idx[..m] {
        for &j in &idx[m..] {
            let d = grid.mean[(i, l)] - grid.mean[(j, l)];
            best = best.min(d * d / (grid.var[(i, l)] + grid.var[(j, l)]));
        }
    }
    best
}

/// Look-ahead value of sampling `p`: worst-context APCS with that cell's
/// variance shrunk by one sample, means held fixed.
pub fn lookahead(grid: &PosteriorGrid, p: PairIndex, m: usize) -> f64 {
    let mut g = grid.clone();
    g.var[(p.design, p.context)] = grid.hypothetical_var(p).unwrap();
    (0..g.q())
        .map(|l| apcs_brute(&g, l, m))
        .fold(f64::INFINITY, f64::min)
}

/// Published ratios of the four balance solutions on the 4x2 example, by
/// solution then design-major (design, context).
pub const TABLE1_R: [[[f64; 2]; 4]; 4] = [
    [
        [0.04210, 0.02285],
        [0.09680, 0.30417],
        [0.19700, 0.27281],
        [0.02991, 0.03436],
    ],
    [
        [0.05393, 0.03241],
        [0.12399, 0.23814],
        [0.25233, 0.21059],
        [0.03831, 0.05030],
    ],
    [
        [0.05930, 0.02590],
        [0.05762, 0.34483],
        [0.12785, 0.30927],
        [0.03628, 0.03895],
    ],
    [
        [0.07892, 0.03817],
        [0.07668, 0.28050],
        [0.17015, 0.24805],
        [0.04829, 0.05924],
    ],
];
pub const TABLE1_Z: [f64; 4] = [0.04748, 0.06081, 0.05382, 0.07163];

/// Largest worst-pair rate over a step-`h` lattice of the simplex, using
/// degree-one homogeneity: search each context's internal split, then the
/// split of budget between contexts.
pub fn grid_search_rate(inst: &ctxrank::Instance, h: f64) -> f64 {
    let n = (1.0 / h).round() as usize;
    let s2 = inst.variances();
    let mut best_ctx = Vec::new();
    for l in 0..inst.q {
        let top = inst.true_top_m(l).unwrap();
        let rest: Vec<usize> = (0..inst.k).filter(|i| !top.contains(i)).collect();
        let mut best = 0.0f64;
        let mut a = vec![0usize; inst.k];
        compositions(n, inst.k, &mut a, 0, &mut |a| {
            let mut z = f64::INFINITY;
            for &i in &top {
                for &j in &rest {
                    let r = ctxrank::ratios::normal_rate(
                        inst.means[(i, l)],
                        inst.means[(j, l)],
                        s2[(i, l)],
                        s2[(j, l)],
                        a[i] as f64 * h,
                        a[j] as f64 * h,
                    )
                    .unwrap();
                    z = z.min(r);
                }
            }
            best = best.max(z);
        });
        best_ctx.push(best);
    }
    match best_ctx.len() {
        1 => best_ctx[0],
        2 => (1..n)
            .map(|b| {
                let b = b as f64 * h;
                (b * best_ctx[0]).min((1.0 - b) * best_ctx[1])
            })
            .fold(0.0, f64::max),
        _ => unimplemented!("at most two contexts"),
    }
}

/// Every way of writing `n` as `k` positive parts.
fn compositions(n: usize, k: usize, a: &mut Vec<usize>, pos: usize, f: &mut dyn FnMut(&[usize])) {
    if pos == k - 1 {
        if n >= 1 {
            a[pos] = n;
            f(a);
        }
        return;
    }
    for v in 1..=n.saturating_sub(k - 1 - pos) {
        a[pos] = v;
        compositions(n - v, k, a, pos + 1, f);
    }
}
