//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use defect_sr::expr::{Op, Token, MAX_SEQ_LEN};
use defect_sr::materials::{DefectStructure, InteractionType, KernelRegistry};
use defect_sr::search::Candidate;
use rand::Rng;

/// Naive recursive evaluator over prefix tokens. Returns the value and the
/// number of tokens consumed, or `None` on any domain error.
pub fn reference_eval(tokens: &[Token], x: &[f64], c: &[f64]) -> Option<f64> {
    fn go(t: &[Token], pos: &mut usize, x: &[f64], c: &[f64]) -> Option<f64> {
        let tok = t[*pos];
        *pos += 1;
        let v = match tok {
            Token::Var(i) => *x.get(i as usize)?,
            Token::Const(s) => *c.get(s as usize)?,
            Token::Op(Op::Sqrt) => {
                let a = go(t, pos, x, c)?;
                if a < 0.0 {
                    return None;
                }
                a.sqrt()
            }
            Token::Op(Op::Cos) => go(t, pos, x, c)?.cos(),
            Token::Op(Op::Exp) => {
                let a = go(t, pos, x, c)?;
                if !(-700.0..=700.0).contains(&a) {
                    return None;
                }
                a.exp()
            }
            Token::Op(op) => {
                let a = go(t, pos, x, c)?;
                let b = go(t, pos, x, c)?;
                match op {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    Op::Div => {
                        if b == 0.0 {
                            return None;
                        }
                        a / b
                    }
                    Op::Pow => {
                        if a <= 0.0 {
                            return None;
                        }
                        let e = b * a.ln();
                        if !(-700.0..=700.0).contains(&e) {
                            return None;
                        }
                        e.exp()
                    }
                    _ => unreachable!(),
                }
            }
        };
        if v.is_finite() {
            Some(v)
        } else {
            None
        }
    }
    let mut pos = 0;
    let v = go(tokens, &mut pos, x, c)?;
    assert_eq!(pos, tokens.len(), "reference evaluator expects a complete expression");
    Some(v)
}

const UNARY: [Op; 3] = [Op::Sqrt, Op::Cos, Op::Exp];
const BINARY: [Op; 5] = [Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Pow];

/// Random prefix expression of depth at most `max_depth` over one variable
/// and `n_consts` constant slots. Draws that exceed the global length cap
/// are rejected and redrawn.
pub fn random_tree_tokens<R: Rng>(rng: &mut R, max_depth: usize, n_consts: u8) -> Vec<Token> {
    loop {
        let mut out = Vec::new();
        grow(rng, max_depth, n_consts, &mut out);
        if out.len() <= MAX_SEQ_LEN {
            return out;
        }
    }
}

fn grow<R: Rng>(rng: &mut R, depth: usize, n_consts: u8, out: &mut Vec<Token>) {
    let leaf = depth <= 1 || rng.random_bool(0.3);
    if leaf {
        if n_consts > 0 && rng.random_bool(0.4) {
            out.push(Token::Const(rng.random_range(0..n_consts)));
        } else {
            out.push(Token::Var(0));
        }
    } else if rng.random_bool(0.35) {
        out.push(Token::Op(UNARY[rng.random_range(0..UNARY.len())]));
        grow(rng, depth - 1, n_consts, out);
    } else {
        out.push(Token::Op(BINARY[rng.random_range(0..BINARY.len())]));
        grow(rng, depth - 1, n_consts, out);
        grow(rng, depth - 1, n_consts, out);
    }
}

/// `1e-12` relative agreement, or both undefined.
pub fn agree(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs()),
        _ => false,
    }
}

/// Quadratic-time non-dominated `(mae, complexity)` pairs, deduplicated and
/// sorted by complexity.
pub fn brute_front(cands: &[Candidate]) -> Vec<(f64, u32)> {
    let mut keep: Vec<(f64, u32)> = Vec::new();
    for c in cands {
        let beaten = cands.iter().any(|d| {
            let no_worse = d.mae <= c.mae && d.complexity <= c.complexity;
            let better = d.mae < c.mae || d.complexity < c.complexity;
            no_worse && better
        });
        if !beaten && !keep.contains(&(c.mae, c.complexity)) {
            keep.push((c.mae, c.complexity));
        }
    }
    keep.sort_by_key(|k| k.1);
    keep
}

/// Periodic distance by scanning images up to three cells away.
pub fn scan_distance(s: &DefectStructure, i: usize, j: usize) -> f64 {
    let (p, q) = (s.defects[i].position, s.defects[j].position);
    let mut best = f64::INFINITY;
    for u in -3i32..=3 {
        for v in -3i32..=3 {
            let mut d2 = 0.0;
            for k in 0..3 {
                let d = q[k] - p[k] + u as f64 * s.cell[k] + v as f64 * s.cell[3 + k];
                d2 += d * d;
            }
            best = best.min(d2.sqrt());
        }
    }
    best
}

fn pair_type(s: &DefectStructure, i: usize, j: usize) -> InteractionType {
    InteractionType::new(s.defects[i].defect_type(), s.defects[j].defect_type())
}

/// `(Σ E_i + ½ Σ_{i≠j} V(r_ij)) / N` over ordered pairs.
pub fn formation_double_loop(s: &DefectStructure, reg: &KernelRegistry) -> f64 {
    let n = s.defects.len();
    let mut e: f64 = s.defects.iter().map(|d| reg.self_energy[&d.defect_type()]).sum();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let k = &reg.kernels[&pair_type(s, i, j)];
                e += 0.5 * k.eval(scan_distance(s, i, j)).unwrap();
            }
        }
    }
    e / n as f64
}

/// Minimum gap kernel value over all ordered pairs.
pub fn gap_min(s: &DefectStructure, reg: &KernelRegistry) -> f64 {
    let n = s.defects.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let k = &reg.gap_kernels[&pair_type(s, i, j)];
                best = best.min(k.eval(scan_distance(s, i, j)).unwrap());
            }
        }
    }
    best
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
