//! Bath pair correlation functions `C_{αβ}(t) = <B_α(t) B_β>` stored as
//! sums of decaying complex exponentials.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{KineticError, Result};
use crate::linalg::{I, ZERO};
use crate::system::fingerprint_json;
use crate::tolerances;

/// One term `a e^{-z t}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub a: C64,
    pub z: C64,
}

/// `C(t) = Σ_k a_k e^{-z_k t}` for `t >= 0`, every `Re z_k > 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ExpSum {
    terms: Vec<ExpTerm>,
}

impl ExpSum {
    pub fn new(terms: Vec<ExpTerm>) -> Result<Self> {
        for (k, t) in terms.iter().enumerate() {
            if !(t.a.re.is_finite() && t.a.im.is_finite() && t.z.re.is_finite() && t.z.im.is_finite()) {
                return Err(KineticError::InvalidExpSum(format!("term {k} is not finite")));
            }
            if t.z.re <= 0.0 {
                return Err(KineticError::InvalidExpSum(format!(
                    "term {k}: Re z = {} but correlations must decay (Re z > 0)",
                    t.z.re
                )));
            }
        }
        Ok(ExpSum { terms })
    }

    pub fn single(a: C64, z: C64) -> Result<Self> {
        Self::new(vec![ExpTerm { a, z }])
    }

    pub fn zero() -> Self {
        ExpSum { terms: Vec::new() }
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    /// Value at `t >= 0`.
    pub fn eval(&self, t: f64) -> C64 {
        self.terms.iter().map(|k| k.a * (-k.z * t).exp()).sum()
    }

    /// `∫_0^∞ e^{iωs} C(s) ds = Σ a / (z - iω)`.
    pub fn half_fourier(&self, omega: f64) -> C64 {
        self.terms.iter().map(|k| k.a / (k.z - I * omega)).sum()
    }

    pub fn scaled(&self, s: C64) -> ExpSum {
        ExpSum {
            terms: self.terms.iter().map(|k| ExpTerm { a: k.a * s, z: k.z }).collect(),
        }
    }

    pub fn min_decay(&self) -> f64 {
        self.terms.iter().map(|k| k.z.re).fold(f64::INFINITY, f64::min)
    }

    pub fn max_rate(&self) -> f64 {
        self.terms.iter().map(|k| k.z.norm()).fold(0.0, f64::max)
    }
}

impl<'de> Deserialize<'de> for ExpSum {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let terms = Vec::<ExpTerm>::deserialize(d)?;
        ExpSum::new(terms).map_err(serde::de::Error::custom)
    }
}

/// `C(t) = (γ₀κ/2) e^{-(κ + iΩ) t}`: the zero-temperature correlation of a
/// Lorentzian spectral density of width `κ` centred at `Ω`.
pub fn lorentzian_correlation(gamma0: f64, kappa: f64, omega: f64) -> Result<ExpSum> {
    if !(gamma0 > 0.0) || !(kappa > 0.0) {
        return Err(KineticError::InvalidParameter(format!(
            "lorentzian requires γ₀ > 0 and κ > 0, got γ₀ = {gamma0}, κ = {kappa}"
        )));
    }
    ExpSum::single(C64::new(0.5 * gamma0 * kappa, 0.0), C64::new(kappa, omega))
}

/// Correlations of `X = (b + b^dagger)/2` and `Y = i(b - b^dagger)/2` in the
/// vacuum, given `c(t) = <b(t) b^dagger>`: `C_XX = C_YY = c/4`,
/// `C_XY = -ic/4`, `C_YX = ic/4`.
pub fn quadrature_pair_correlations(c: &ExpSum) -> CorrelationMatrix {
    let mut cm = CorrelationMatrix::new(vec!["X".into(), "Y".into()], None);
    cm.insert(0, 0, c.scaled(C64::new(0.25, 0.0)));
    cm.insert(1, 1, c.scaled(C64::new(0.25, 0.0)));
    cm.insert(0, 1, c.scaled(C64::new(0.0, -0.25)));
    cm.insert(1, 0, c.scaled(C64::new(0.0, 0.25)));
    cm
}

/// Pair correlations between bath operators, indexed by coupling position.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    labels: Vec<String>,
    entries: Vec<Vec<Option<ExpSum>>>,
    /// Inverse temperature, used only for detailed-balance diagnostics.
    pub beta: Option<f64>,
}

impl CorrelationMatrix {
    pub fn new(labels: Vec<String>, beta: Option<f64>) -> Self {
        let n = labels.len();
        CorrelationMatrix {
            labels,
            entries: vec![vec![None; n]; n],
            beta,
        }
    }

    /// One coupling with correlation `c`.
    pub fn single(c: ExpSum) -> Self {
        let mut cm = Self::new(vec!["B".into()], None);
        cm.insert(0, 0, c);
        cm
    }

    pub fn insert(&mut self, alpha: usize, beta: usize, c: ExpSum) {
        self.entries[alpha][beta] = Some(c);
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn entry(&self, alpha: usize, beta: usize) -> Result<&ExpSum> {
        self.entries
            .get(alpha)
            .and_then(|row| row.get(beta))
            .and_then(|e| e.as_ref())
            .ok_or_else(|| KineticError::MissingCorrelation {
                alpha: self.label_or_index(alpha),
                beta: self.label_or_index(beta),
            })
    }

    fn label_or_index(&self, i: usize) -> String {
        self.labels.get(i).cloned().unwrap_or_else(|| i.to_string())
    }

    /// Checks the static matrix `C_{αβ}(0)` for Hermiticity.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        for a in 0..n {
            for b in a..n {
                let cab = self.entries[a][b].as_ref().map(|c| c.eval(0.0));
                let cba = self.entries[b][a].as_ref().map(|c| c.eval(0.0));
                let dev = match (cab, cba) {
                    (Some(x), Some(y)) => (x - y.conj()).norm(),
                    (Some(x), None) | (None, Some(x)) => x.norm(),
                    (None, None) => 0.0,
                };
                if dev > tolerances::STATIC_CORRELATION_HERMITIAN {
                    return Err(KineticError::NotHermitian {
                        what: format!("static correlation C({},{})(0)", self.labels[a], self.labels[b]),
                        deviation: dev,
                    });
                }
            }
        }
        Ok(())
    }

    /// `C_{αβ}(t)`; negative times use `C_{αβ}(-t) = conj(C_{βα}(t))`.
    pub fn eval(&self, alpha: usize, beta: usize, t: f64) -> Result<C64> {
        if t >= 0.0 {
            Ok(self.entry(alpha, beta)?.eval(t))
        } else {
            Ok(self.entry(beta, alpha)?.eval(-t).conj())
        }
    }

    /// `Γ_{αβ}(ω) = ∫_0^∞ e^{iωs} C_{αβ}(s) ds`.
    pub fn half_fourier(&self, alpha: usize, beta: usize, omega: f64) -> Result<C64> {
        Ok(self.entry(alpha, beta)?.half_fourier(omega))
    }

    /// `∫_0^∞ e^{iωs} C_{αβ}(τ + s) ds` for any real `τ`.
    pub fn shifted_half_fourier(&self, alpha: usize, beta: usize, omega: f64, tau: f64) -> Result<C64> {
        let direct = self.entry(alpha, beta)?;
        if tau >= 0.0 {
            return Ok(direct
                .terms()
                .iter()
                .map(|k| k.a * (-k.z * tau).exp() / (k.z - I * omega))
                .sum());
        }
        // s < |τ|: argument negative, C_{αβ}(u) = conj(C_{βα}(-u)) = Σ conj(a) e^{conj(z) u}
        let w = -tau;
        let mut acc = ZERO;
        for k in self.entry(beta, alpha)?.terms() {
            let zc = k.z.conj();
            acc += k.a.conj() * (zc * tau).exp() * phi1(I * omega + zc, w);
        }
        let tail: C64 = direct.terms().iter().map(|k| k.a / (k.z - I * omega)).sum();
        Ok(acc + (I * omega * w).exp() * tail)
    }

    /// Largest decay scale `|z_k|` over all entries.
    pub fn max_rate(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .flatten()
            .map(|c| c.max_rate())
            .fold(0.0, f64::max)
    }

    /// Smallest `Re z_k` over all entries.
    pub fn min_decay(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .flatten()
            .map(|c| c.min_decay())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn fingerprint(&self) -> String {
        fingerprint_json(&serde_json::to_vec(self).expect("serializable"))
    }
}

/// `(e^{qt} - 1) / q`, continuous at `q = 0`.
pub(crate) fn phi1(q: C64, t: f64) -> C64 {
    let x = q * t;
    if x.norm() < 1e-3 {
        let mut term = C64::new(t, 0.0);
        let mut sum = term;
        for n in 2..8 {
            term = term * x / n as f64;
            sum += term;
        }
        sum
    } else {
        (x.exp() - 1.0) / q
    }
}

#[derive(Serialize, Deserialize)]
struct CorrelationJson {
    labels: Vec<String>,
    entries: BTreeMap<String, ExpSum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
}

impl Serialize for CorrelationMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut entries = BTreeMap::new();
        for (a, row) in self.entries.iter().enumerate() {
            for (b, e) in row.iter().enumerate() {
                if let Some(c) = e {
                    entries.insert(format!("{},{}", self.labels[a], self.labels[b]), c.clone());
                }
            }
        }
        CorrelationJson {
            labels: self.labels.clone(),
            entries,
            beta: self.beta,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CorrelationMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let j = CorrelationJson::deserialize(d)?;
        if let Some(bad) = j.labels.iter().find(|l| l.contains(',')) {
            return Err(D::Error::custom(format!("label {bad:?} contains a comma")));
        }
        let mut cm = CorrelationMatrix::new(j.labels, j.beta);
        for (key, c) in j.entries {
            let (a, b) = key
                .split_once(',')
                .ok_or_else(|| D::Error::custom(format!("entry key {key:?} is not \"alpha,beta\"")))?;
            let ia = cm
                .index_of(a.trim())
                .ok_or_else(|| D::Error::custom(format!("unknown label {a:?} in entry {key:?}")))?;
            let ib = cm
                .index_of(b.trim())
                .ok_or_else(|| D::Error::custom(format!("unknown label {b:?} in entry {key:?}")))?;
            cm.insert(ia, ib, c);
        }
        Ok(cm)
    }
}

/// Gaussian moment `<B_{α_1}(t_1) ... B_{α_n}(t_n)>`: zero for odd `n`,
/// otherwise the sum over pairings `j₁ < j₂` of `Π C_{α_{j₁} α_{j₂}}(t_{j₁} - t_{j₂})`.
pub fn wick_moment(cm: &CorrelationMatrix, ops: &[(usize, f64)]) -> Result<C64> {
    if ops.len() % 2 == 1 {
        return Ok(ZERO);
    }
    let mut table = vec![vec![ZERO; ops.len()]; ops.len()];
    for i in 0..ops.len() {
        for j in i + 1..ops.len() {
            table[i][j] = cm.eval(ops[i].0, ops[j].0, ops[i].1 - ops[j].1)?;
        }
    }
    let mut remaining: Vec<usize> = (0..ops.len()).collect();
    Ok(pair_sum(&table, &mut remaining))
}

fn pair_sum(table: &[Vec<C64>], remaining: &mut Vec<usize>) -> C64 {
    if remaining.is_empty() {
        return C64::new(1.0, 0.0);
    }
    let first = remaining.remove(0);
    let mut total = ZERO;
    for k in 0..remaining.len() {
        let partner = remaining.remove(k);
        let c = table[first][partner];
        if c != ZERO {
            total += c * pair_sum(table, remaining);
        }
        remaining.insert(k, partner);
    }
    remaining.insert(0, first);
    total
}
