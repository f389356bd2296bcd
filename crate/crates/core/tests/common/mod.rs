#![allow(dead_code)]

use ehsense::model::{schedule_cost, Schedule, SystemParams};
use ehsense::offline::MIN_BUSY_POWER;

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod quadrature to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth > 40 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    rec(f, a, b, tol, 0)
}

/// `e^z E1(z) = int_0^inf exp(-z (e^x - 1)) dx`, by quadrature.
pub fn scaled_e1_quadrature(z: f64) -> f64 {
    let upper = (1.0 + 50.0 / z).ln();
    integrate(&|x: f64| (-z * x.exp_m1()).exp(), 0.0, upper, 1e-15)
}

/// Grid minimum of `f` over `[lo, hi]`.
pub fn grid_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> (f64, f64) {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n)
        .map(|i| lo + i as f64 * step)
        .map(|x| (x, f(x)))
        .fold((lo, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
}

/// Largest cost decrease from moving `step` energy from a busy block to a later one.
pub fn best_forward_transfer(schedule: &Schedule, params: &SystemParams, step: f64) -> f64 {
    let base = schedule_cost(schedule, params);
    let p = schedule.powers();
    let mut best: f64 = 0.0;
    for i in 0..p.len() {
        if p[i] - step < MIN_BUSY_POWER {
            continue;
        }
        for j in i + 1..p.len() {
            let mut q = p.to_vec();
            q[i] -= step;
            q[j] += step;
            let s = Schedule::new(schedule.inter_tx().to_vec(), q).unwrap();
            best = best.max(base - schedule_cost(&s, params));
        }
    }
    best
}

/// Minimiser of `sum a_l / (c + P_l)` under `P_l >= floor` and prefix energy
/// constraints, by repeated exact pairwise exchanges.
///
/// Moving energy from `i` to `j > i` is always feasible; moving it back from
/// `j` to `i` is limited by the prefix slack on `i..j`.
pub fn pairwise_exchange_oracle(weights: &[f64], energy: &[f64], c: f64, floor: f64) -> Vec<f64> {
    let n = weights.len();
    let mut p: Vec<f64> = energy.to_vec();
    // Start from spending each interval's energy on its own block, then lift
    // to the floor by borrowing from the earliest surplus.
    for l in 0..n {
        if p[l] < floor {
            let need = floor - p[l];
            let donor = (0..l).rev().find(|&i| p[i] - floor >= need).expect("feasible instance");
            p[donor] -= need;
            p[l] = floor;
        }
    }
    let slack = |p: &[f64], l: usize| -> f64 {
        let used: f64 = p[..=l].iter().sum();
        let have: f64 = energy[..=l].iter().sum();
        have - used
    };
    for _ in 0..20_000 {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                // Allowed change t for P_i += t, P_j -= t: t in [lo, hi].
                let lo = -(p[i] - floor);
                let hi = (p[j] - floor).min((i..j).map(|l| slack(&p, l)).fold(f64::INFINITY, f64::min));
                let (ai, aj) = (weights[i], weights[j]);
                let total = p[i] + p[j];
                // Stationary point of ai/(c+x) + aj/(c+total-x).
                let x = if ai == 0.0 && aj == 0.0 {
                    p[i]
                } else if aj == 0.0 {
                    f64::INFINITY
                } else if ai == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    let r = (ai / aj).sqrt();
                    (r * (c + total) - c) / (1.0 + r)
                };
                let t = (x - p[i]).clamp(lo, hi.max(lo));
                if t.abs() > 1e-15 {
                    p[i] += t;
                    p[j] -= t;
                    moved = moved.max(t.abs());
                }
            }
        }
        if moved < 1e-13 {
            break;
        }
    }
    p
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}
