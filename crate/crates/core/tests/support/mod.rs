//! Independent dense simulation of the built-in schedule.
//!
//! Every step is written out by hand as a real orthogonal matrix on the
//! registers it touches, embedded into the full 2520-dimensional space and
//! applied by a plain matrix-vector product. Nothing here goes through the
//! crate's parser, operators or measurement code.

#![allow(dead_code)]

use std::collections::BTreeMap;

use wignerbox::hilbert::StateVector;
use wignerbox::Amplitude;

pub const R: usize = 0;
pub const FBAR_MEM: usize = 1;
pub const S: usize = 2;
pub const F_MEM: usize = 3;
pub const WBAR_MEM: usize = 4;
pub const W_MEM: usize = 5;

pub const REGISTERS: [(&str, &[&str]); 6] = [
    ("R", &["heads", "tails"]),
    ("FbarMem", &["ready", "heads_noconcl", "tails_w_fail"]),
    ("S", &["up", "down"]),
    (
        "FMem",
        &[
            "ready",
            "z_plus",
            "z_minus",
            "z_plus_r_tails",
            "z_minus_noconcl",
            "z_plus_w_fail",
        ],
    ),
    (
        "WbarMem",
        &["ready", "okbar", "failbar", "okbar_w_fail", "failbar_noconcl"],
    ),
    (
        "WMem",
        &[
            "ready",
            "noconcl",
            "w_fail",
            "noconcl_ok",
            "noconcl_fail",
            "w_fail_ok",
            "w_fail_fail",
        ],
    ),
];

/// Ticks of the twelve steps, in order.
pub const TICKS: [u32; 12] = [0, 1, 2, 10, 11, 13, 20, 21, 26, 30, 31, 40];

pub fn dims() -> Vec<usize> {
    REGISTERS.iter().map(|(_, a)| a.len()).collect()
}

pub fn dimension() -> usize {
    dims().iter().product()
}

fn digits(mut i: usize, dims: &[usize]) -> Vec<usize> {
    let mut d = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        d[k] = i % dims[k];
        i /= dims[k];
    }
    d
}

fn compose(d: &[usize], dims: &[usize]) -> usize {
    d.iter().zip(dims).fold(0, |acc, (x, n)| acc * n + x)
}

pub fn token_index(register: usize, token: &str) -> usize {
    REGISTERS[register]
        .1
        .iter()
        .position(|t| *t == token)
        .unwrap_or_else(|| panic!("{token} not in {}", REGISTERS[register].0))
}

/// Dense index of a full label given in register order.
pub fn index_of(label: &[&str]) -> usize {
    let d: Vec<usize> = label.iter().enumerate().map(|(r, t)| token_index(r, t)).collect();
    compose(&d, &dims())
}

/// A square matrix on a subset of registers, row-major, `m[row][col]`.
pub struct Local {
    pub regs: Vec<usize>,
    pub m: Vec<Vec<f64>>,
}

impl Local {
    fn local_dims(&self) -> Vec<usize> {
        let all = dims();
        self.regs.iter().map(|&r| all[r]).collect()
    }

    fn size(&self) -> usize {
        self.local_dims().iter().product()
    }

    fn zero(regs: Vec<usize>) -> Self {
        let mut l = Local { regs, m: Vec::new() };
        let n = l.size();
        l.m = vec![vec![0.0; n]; n];
        l
    }

    /// Permutation matrix sending local digit tuple `d` to `f(d)`.
    fn permutation(regs: Vec<usize>, f: impl Fn(&[usize]) -> Vec<usize>) -> Self {
        let mut l = Local::zero(regs);
        let ld = l.local_dims();
        for c in 0..l.size() {
            let r = compose(&f(&digits(c, &ld)), &ld);
            l.m[r][c] = 1.0;
        }
        l
    }

    /// max |MᵀM - I|.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.size();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| self.m[k][i] * self.m[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - want).abs());
            }
        }
        worst
    }

    /// The full 2520 x 2520 matrix, identity on the other registers.
    pub fn embed(&self) -> Vec<f64> {
        let all = dims();
        let n = dimension();
        let ld = self.local_dims();
        let mut full = vec![0.0; n * n];
        for j in 0..n {
            let dj = digits(j, &all);
            let sub: Vec<usize> = self.regs.iter().map(|&r| dj[r]).collect();
            let c = compose(&sub, &ld);
            for (r, row) in self.m.iter().enumerate() {
                if row[c] == 0.0 {
                    continue;
                }
                let mut di = dj.clone();
                for (k, x) in digits(r, &ld).into_iter().enumerate() {
                    di[self.regs[k]] = x;
                }
                full[compose(&di, &all) * n + j] = row[c];
            }
        }
        full
    }
}

fn swap(x: usize, a: usize, b: usize) -> usize {
    if x == a {
        b
    } else if x == b {
        a
    } else {
        x
    }
}

/// Measurement of a rank-two basis `{v_k}` of `system`, recorded by
/// permutations `records[k]` of `memory`: Σ_k |v_k⟩⟨v_k| ⊗ P_k + Q ⊗ I, with
/// Q the projector onto the complement of the span.
fn measurement(system: Vec<usize>, memory: usize, basis: &[Vec<f64>], records: &[Vec<usize>]) -> Local {
    let mut regs = system.clone();
    regs.push(memory);
    let mut l = Local::zero(regs);
    let all = dims();
    let sd: usize = system.iter().map(|&r| all[r]).product();
    let md = all[memory];
    for a in 0..sd {
        for a2 in 0..sd {
            let proj: f64 = basis.iter().map(|v| v[a] * v[a2]).sum();
            let comp = if a == a2 { 1.0 } else { 0.0 } - proj;
            for w2 in 0..md {
                let col = a2 * md + w2;
                for (v, rec) in basis.iter().zip(records) {
                    l.m[a * md + rec[w2]][col] += v[a] * v[a2];
                }
                l.m[a * md + w2][col] += comp;
            }
        }
    }
    l
}

/// The twelve step operators, in schedule order.
pub fn steps() -> Vec<Local> {
    let h = 0.5f64.sqrt();
    let (a, b) = ((1.0f64 / 3.0).sqrt(), (2.0f64 / 3.0).sqrt());
    let tok = token_index;

    // R: heads -> sqrt(1/3) heads + sqrt(2/3) tails.
    let coin = Local {
        regs: vec![R],
        m: vec![vec![a, b], vec![b, -a]],
    };

    // S on (R, S): heads flips up to down; tails rotates up to (down + up)/sqrt2.
    let mut prep = Local::zero(vec![R, S]);
    let (up, down) = (tok(S, "up"), tok(S, "down"));
    prep.m[down][up] = 1.0;
    prep.m[up][down] = 1.0;
    prep.m[2 + down][2 + up] = h;
    prep.m[2 + up][2 + up] = h;
    prep.m[2 + up][2 + down] = h;
    prep.m[2 + down][2 + down] = -h;

    let fbar_read = Local::permutation(vec![R, FBAR_MEM], |d| {
        let target = if d[0] == tok(R, "heads") {
            "heads_noconcl"
        } else {
            "tails_w_fail"
        };
        vec![d[0], swap(d[1], 0, tok(FBAR_MEM, target))]
    });

    let f_measure = Local::permutation(vec![S, F_MEM], |d| {
        let target = if d[0] == up { "z_plus" } else { "z_minus" };
        vec![d[0], swap(d[1], 0, tok(F_MEM, target))]
    });

    let f_infer = Local::permutation(vec![F_MEM], |d| {
        let x = swap(d[0], tok(F_MEM, "z_plus"), tok(F_MEM, "z_plus_r_tails"));
        vec![swap(x, tok(F_MEM, "z_minus"), tok(F_MEM, "z_minus_noconcl"))]
    });

    let f_lift = Local::permutation(vec![F_MEM], |d| {
        vec![swap(d[0], tok(F_MEM, "z_plus_r_tails"), tok(F_MEM, "z_plus_w_fail"))]
    });

    // Wbar's basis on (R, FbarMem), dimension 6.
    let hbar = tok(R, "heads") * 3 + tok(FBAR_MEM, "heads_noconcl");
    let tbar = tok(R, "tails") * 3 + tok(FBAR_MEM, "tails_w_fail");
    let mut okbar = vec![0.0; 6];
    okbar[hbar] = h;
    okbar[tbar] = -h;
    let mut failbar = vec![0.0; 6];
    failbar[hbar] = h;
    failbar[tbar] = h;
    let wbar_record = |t: &str| -> Vec<usize> { (0..5).map(|w| swap(w, 0, tok(WBAR_MEM, t))).collect() };
    let wbar_measure = measurement(
        vec![R, FBAR_MEM],
        WBAR_MEM,
        &[okbar, failbar],
        &[wbar_record("okbar"), wbar_record("failbar")],
    );

    let wbar_infer = Local::permutation(vec![WBAR_MEM], |d| {
        let x = swap(d[0], tok(WBAR_MEM, "okbar"), tok(WBAR_MEM, "okbar_w_fail"));
        vec![swap(x, tok(WBAR_MEM, "failbar"), tok(WBAR_MEM, "failbar_noconcl"))]
    });

    let w_read = Local::permutation(vec![WBAR_MEM, W_MEM], |d| {
        let out = if d[0] == tok(WBAR_MEM, "okbar_w_fail") {
            swap(d[1], 0, tok(W_MEM, "w_fail"))
        } else if d[0] == tok(WBAR_MEM, "failbar_noconcl") {
            swap(d[1], 0, tok(W_MEM, "noconcl"))
        } else {
            d[1]
        };
        vec![d[0], out]
    });

    // W's basis on (S, FMem), dimension 12.
    let minus = down * 6 + tok(F_MEM, "z_minus_noconcl");
    let plus = up * 6 + tok(F_MEM, "z_plus_w_fail");
    let mut ok = vec![0.0; 12];
    ok[minus] = h;
    ok[plus] = -h;
    let mut fail = vec![0.0; 12];
    fail[minus] = h;
    fail[plus] = h;
    let w_record = |outcome: &str| -> Vec<usize> {
        let nc = tok(W_MEM, &format!("noconcl_{outcome}"));
        let wf = tok(W_MEM, &format!("w_fail_{outcome}"));
        (0..7)
            .map(|w| swap(swap(w, tok(W_MEM, "noconcl"), nc), tok(W_MEM, "w_fail"), wf))
            .collect()
    };
    let w_measure = measurement(vec![S, F_MEM], W_MEM, &[ok, fail], &[w_record("ok"), w_record("fail")]);

    let identity = || Local::permutation(vec![W_MEM], |d| d.to_vec());
    vec![
        coin,
        prep,
        fbar_read,
        f_measure,
        f_infer,
        f_lift,
        wbar_measure,
        wbar_infer,
        w_read,
        w_measure,
        identity(),
        identity(),
    ]
}

pub fn initial() -> Vec<f64> {
    let mut psi = vec![0.0; dimension()];
    psi[index_of(&["heads", "ready", "up", "ready", "ready", "ready"])] = 1.0;
    psi
}

fn mat_vec(m: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| m[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// The state after each step.
pub fn evolve() -> Vec<Vec<f64>> {
    let mut psi = initial();
    let mut out = Vec::new();
    for op in steps() {
        psi = mat_vec(&op.embed(), &psi);
        out.push(psi.clone());
    }
    out
}

/// The engine's state laid out densely in this module's basis order.
pub fn densify<A: Amplitude>(psi: &StateVector<A>) -> Vec<f64> {
    let mut out = vec![0.0; dimension()];
    let space = psi.space();
    let order: Vec<usize> = REGISTERS
        .iter()
        .map(|(name, _)| {
            space
                .registers()
                .iter()
                .position(|r| r.id.as_str() == *name)
                .expect("register present")
        })
        .collect();
    for (label, amp) in psi.terms() {
        let tokens: Vec<&str> = order.iter().map(|&i| label[i].as_str()).collect();
        out[index_of(&tokens)] = amp.to_f64();
    }
    out
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Joint distribution of (Wbar's recorded value, W's recorded value).
pub fn outcome_distribution(psi: &[f64]) -> BTreeMap<(String, String), f64> {
    let all = dims();
    let mut out = BTreeMap::new();
    for (i, a) in psi.iter().enumerate() {
        if *a == 0.0 {
            continue;
        }
        let d = digits(i, &all);
        let wbar = match REGISTERS[WBAR_MEM].1[d[WBAR_MEM]] {
            "okbar" | "okbar_w_fail" => "okbar",
            "failbar" | "failbar_noconcl" => "failbar",
            other => other,
        };
        let w = match REGISTERS[W_MEM].1[d[W_MEM]] {
            "noconcl_ok" | "w_fail_ok" => "ok",
            "noconcl_fail" | "w_fail_fail" => "fail",
            other => other,
        };
        *out.entry((wbar.to_string(), w.to_string())).or_insert(0.0) += a * a;
    }
    // Rounding leaves tiny amplitudes on labels the exact state never reaches.
    out.retain(|_, p| *p > 1e-20);
    out
}

/// Marginal distribution of one register.
pub fn marginal(psi: &[f64], register: usize) -> Vec<f64> {
    let all = dims();
    let mut out = vec![0.0; all[register]];
    for (i, a) in psi.iter().enumerate() {
        out[digits(i, &all)[register]] += a * a;
    }
    out
}

/// ⟨v|psi⟩ for the product vector with Wbar's outcome `wbar` on (R, FbarMem),
/// W's outcome `w` on (S, FMem), and the given memory tokens.
pub fn presented_amplitude(psi: &[f64], wbar: &str, wbar_mem: &str, w: &str, w_mem: &str) -> f64 {
    let h = 0.5f64.sqrt();
    let sign = |outcome: &str| if outcome.starts_with("ok") { -1.0 } else { 1.0 };
    let lab = [
        (["heads", "heads_noconcl"], h),
        (["tails", "tails_w_fail"], sign(wbar) * h),
    ];
    let fl = [(["down", "z_minus_noconcl"], h), (["up", "z_plus_w_fail"], sign(w) * h)];
    let mut total = 0.0;
    for (rf, c1) in &lab {
        for (sf, c2) in &fl {
            let i = index_of(&[rf[0], rf[1], sf[0], sf[1], wbar_mem, w_mem]);
            total += c1 * c2 * psi[i];
        }
    }
    total
}
