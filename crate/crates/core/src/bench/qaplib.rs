//! QAPLIB `.dat` / `.sln` files.
//!
//! `.dat`: `n`, then the `n²` entries of `A`, then the `n²` entries of `B`,
//! all separated by arbitrary ASCII whitespace. `.sln`: `n`, the objective,
//! then a 1-indexed permutation. Some published solution files separate
//! permutation entries with commas; those are accepted as whitespace.
//!
//! Objective: `Σ_ij A[i][j] B[p(i)][p(j)]`, minimized.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use std::sync::Arc;

use crate::affinity::{association_from_affinity, kb_to_lawler, QapForm, Sense};
use crate::error::{Error, Result};
use crate::ngm::{Problem, Sample, Supervision};
use crate::numerics::{Assignment, DenseMatrix, SparseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct QaplibInstance {
    pub name: String,
    pub n: usize,
    pub a: DenseMatrix<f64>,
    pub b: DenseMatrix<f64>,
    /// Objective of the published solution, when one is available.
    pub known_feasible_bound: Option<f64>,
}

fn tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| c.is_ascii_whitespace() || c == ',').filter(|t| !t.is_empty())
}

fn int_token(tok: Option<&str>, what: &str) -> Result<i64> {
    let t = tok.ok_or_else(|| Error::Parse(format!("truncated stream: missing {what}")))?;
    t.parse::<i64>().map_err(|_| Error::Parse(format!("non-integer token '{t}' in {what}")))
}

pub fn parse_qaplib(name: &str, text: &str) -> Result<QaplibInstance> {
    let mut it = tokens(text);
    let n = int_token(it.next(), "size")?;
    if n < 2 {
        return Err(Error::Parse(format!("instance size {n} < 2")));
    }
    let n = n as usize;
    let mut read = |what: &str| -> Result<DenseMatrix<f64>> {
        let mut data = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            data.push(int_token(it.next(), what)? as f64);
        }
        DenseMatrix::from_vec(n, n, data)
    };
    let a = read("matrix A")?;
    let b = read("matrix B")?;
    if let Some(extra) = it.next() {
        return Err(Error::Parse(format!("trailing token '{extra}' after matrix B")));
    }
    Ok(QaplibInstance {
        name: name.to_string(),
        n,
        a,
        b,
        known_feasible_bound: None,
    })
}

/// Canonical text form; parsing it gives the same instance back.
pub fn serialize_qaplib(inst: &QaplibInstance) -> String {
    let mut out = format!("{}\n\n", inst.n);
    for m in [&inst.a, &inst.b] {
        for i in 0..inst.n {
            let row: Vec<String> = m.row(i).iter().map(|v| format!("{}", *v as i64)).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out.push('\n');
    }
    out
}

/// `(objective, permutation)` with the permutation converted to 0-indexed
/// form (`row i -> column p(i)`).
pub fn parse_qaplib_solution(text: &str) -> Result<(f64, Assignment)> {
    let mut it = tokens(text);
    let n = int_token(it.next(), "solution size")?;
    if n < 1 {
        return Err(Error::Parse(format!("solution size {n}")));
    }
    let n = n as usize;
    let obj = int_token(it.next(), "objective")? as f64;
    let mut perm = Vec::with_capacity(n);
    for _ in 0..n {
        let p = int_token(it.next(), "permutation")?;
        if p < 1 || p as usize > n {
            return Err(Error::Parse(format!("permutation entry {p} outside 1..={n}")));
        }
        perm.push(p as usize - 1);
    }
    let x = Assignment::new(n, perm).map_err(|_| Error::Parse("solution permutation is not a bijection".into()))?;
    Ok((obj, x))
}

pub fn serialize_qaplib_solution(obj: f64, x: &Assignment) -> String {
    let perm: Vec<String> = x.col_of_row().iter().map(|p| (p + 1).to_string()).collect();
    format!("{} {}\n{}\n", x.rows(), obj as i64, perm.join(" "))
}

impl QaplibInstance {
    pub fn objective(&self, x: &Assignment) -> Result<f64> {
        if x.rows() != self.n || x.cols() != self.n {
            return Err(Error::Shape(format!("{}x{} assignment for size {}", x.rows(), x.cols(), self.n)));
        }
        let p = x.col_of_row();
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                acc += self.a[(i, j)] * self.b[(p[i], p[j])];
            }
        }
        Ok(acc)
    }

    /// Lawler affinity of the minimization problem:
    /// `Σ A_ij B_p(i)p(j) = tr(Xᵀ A X Bᵀ)`, hence `F1 = A`, `F2 = Bᵀ`.
    pub fn affinity(&self) -> Result<SparseMatrix<f64>> {
        match kb_to_lawler(&self.a, &self.b.transpose(), None)?.form {
            QapForm::Lawler { k, .. } => Ok(k),
            QapForm::KoopmansBeckmann { .. } => unreachable!(),
        }
    }

    pub fn sense(&self) -> Sense {
        Sense::Minimize
    }

    /// `K / max K`. Scaling keeps network inputs and the objective loss in
    /// a range where `exp(alpha * score)` stays informative; it does not
    /// change the minimizer.
    pub fn normalized_affinity(&self) -> Result<SparseMatrix<f64>> {
        let k = self.affinity()?;
        let top = k.max_value().filter(|&m| m > 0.0).ok_or_else(|| Error::Degenerate(format!("{}: affinity has no positive entry", self.name)))?;
        Ok(k.map_values(|v| v / top))
    }

    /// Self-supervised training sample: association graph of the normalized
    /// affinity, with its (minimized) objective as the loss.
    pub fn sample(&self) -> Result<Sample<f64>> {
        let k = self.normalized_affinity()?;
        let problem = Problem::new(&association_from_affinity(&k, self.n, self.n)?)?;
        Ok(Sample {
            problem,
            target: Supervision::Objective {
                k: Arc::new(k),
                sense: Sense::Minimize,
            },
        })
    }
}

/// `K' = max(K) - K` over all `(n1 n2)²` entries, turning the minimization
/// into a maximization with nonnegative affinities for SM/RRWM.
pub fn flip_for_maximization(k: &SparseMatrix<f64>) -> SparseMatrix<f64> {
    let top = k.max_value().unwrap_or(0.0).max(0.0);
    let n = k.rows();
    let mut entries = Vec::with_capacity(n * k.cols());
    for r in 0..n {
        let mut row = k.row(r).peekable();
        for c in 0..k.cols() {
            let v = match row.peek() {
                Some(&(cc, v)) if cc == c => {
                    row.next();
                    v
                }
                _ => 0.0,
            };
            let f = top - v;
            if f != 0.0 {
                entries.push((r, c, f));
            }
        }
    }
    SparseMatrix::from_triplets(n, k.cols(), entries).expect("entries of a valid matrix")
}

/// Category of an instance name: the leading alphabetic part (`chr12c` ->
/// `chr`).
pub fn category_of(name: &str) -> String {
    name.chars().take_while(|c| c.is_ascii_alphabetic()).collect::<String>().to_ascii_lowercase()
}

/// Reads every `<name>.dat` in `dir` (with `<name>.sln` if present), sorted
/// by name, keeping sizes `<= max_n`.
pub fn load_qaplib_dir(dir: &Path, max_n: usize) -> Result<Vec<QaplibInstance>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "dat"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let text = std::fs::read_to_string(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        let mut inst = parse_qaplib(&name, &text).map_err(|e| Error::Parse(format!("{name}: {e}")))?;
        if inst.n > max_n {
            continue;
        }
        let sln = p.with_extension("sln");
        if sln.exists() {
            let t = std::fs::read_to_string(&sln).map_err(|e| Error::Io(format!("{}: {e}", sln.display())))?;
            let (obj, _) = parse_qaplib_solution(&t).map_err(|e| Error::Parse(format!("{name}.sln: {e}")))?;
            inst.known_feasible_bound = Some(obj);
        }
        out.push(inst);
    }
    Ok(out)
}
