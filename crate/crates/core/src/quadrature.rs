//! Adaptive Gauss–Legendre integration over rectangles and disks.

use std::f64::consts::PI;
use std::sync::OnceLock;

const ORDER: usize = 16;
const MAX_DEPTH: u32 = 12;

/// Relative stopping tolerance used by the element-power integrals.
pub const DEFAULT_REL_TOL: f64 = 1e-8;

struct Rule {
    nodes: [f64; ORDER],
    weights: [f64; ORDER],
}

fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let mut nodes = [0.0; ORDER];
        let mut weights = [0.0; ORDER];
        let n = ORDER as f64;
        for i in 0..ORDER {
            // Newton iteration on P_n from the Chebyshev-like initial guess.
            let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=ORDER {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        Rule { nodes, weights }
    })
}

/// Fixed tensor-product rule over `[x0, x1] × [y0, y1]`.
fn tensor<F: Fn(f64, f64) -> f64>(f: &F, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let r = rule();
    let (hx, cx) = (0.5 * (x1 - x0), 0.5 * (x1 + x0));
    let (hy, cy) = (0.5 * (y1 - y0), 0.5 * (y1 + y0));
    let mut acc = 0.0;
    for (xi, wx) in r.nodes.iter().zip(r.weights.iter()) {
        let x = cx + hx * xi;
        let mut row = 0.0;
        for (yi, wy) in r.nodes.iter().zip(r.weights.iter()) {
            row += wy * f(x, cy + hy * yi);
        }
        acc += wx * row;
    }
    acc * hx * hy
}

fn refine<F: Fn(f64, f64) -> f64>(
    f: &F,
    rect: (f64, f64, f64, f64),
    coarse: f64,
    abs_tol: f64,
    depth: u32,
) -> f64 {
    let (x0, x1, y0, y1) = rect;
    let (xm, ym) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
    let quads = [(x0, xm, y0, ym), (xm, x1, y0, ym), (x0, xm, ym, y1), (xm, x1, ym, y1)];
    let parts: Vec<f64> = quads.iter().map(|&(a, b, c, d)| tensor(f, a, b, c, d)).collect();
    let fine: f64 = parts.iter().sum();
    if (fine - coarse).abs() <= abs_tol || depth >= MAX_DEPTH {
        return fine;
    }
    quads
        .iter()
        .zip(parts)
        .map(|(&q, p)| refine(f, q, p, abs_tol / 4.0, depth + 1))
        .sum()
}

/// Integrates `f` over a rectangle, subdividing until the estimate changes by
/// less than `rel_tol` relative to the running total.
pub fn integrate_rect<F: Fn(f64, f64) -> f64>(
    f: F,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    rel_tol: f64,
) -> f64 {
    if x1 <= x0 || y1 <= y0 {
        return 0.0;
    }
    let coarse = tensor(&f, x0, x1, y0, y1);
    // A coarse estimate of zero would make the relative target meaningless.
    let scale = coarse.abs().max(f64::MIN_POSITIVE);
    refine(&f, (x0, x1, y0, y1), coarse, rel_tol * scale, 0)
}

/// Integrates `f(x, y)` over the disk of `radius` about `(cx, cy)` using polar
/// coordinates; the `(ρ, φ)` rectangle is refined adaptively.
pub fn integrate_disk<F: Fn(f64, f64) -> f64>(f: F, cx: f64, cy: f64, radius: f64, rel_tol: f64) -> f64 {
    if radius <= 0.0 {
        return 0.0;
    }
    let polar = |rho: f64, phi: f64| {
        let (s, c) = phi.sin_cos();
        f(cx + rho * c, cy + rho * s) * rho
    };
    integrate_rect(polar, 0.0, radius, 0.0, 2.0 * PI, rel_tol)
}
