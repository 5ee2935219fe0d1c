//! Matrix formulas: expression trees over named input matrices.
//!
//! Text syntax:
//!
//! ```text
//! program := decl* expr
//! decl    := IDENT ':' INT 'x' INT ';'
//! expr    := term (('+' | '-') term)*
//! term    := factor ('*' factor)*
//! factor  := IDENT | 'inv' '(' expr ')' | '(' expr ')'
//! ```
//!
//! A name may occur several times; every occurrence is a separate leaf.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormulaError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("input {0:?} is used but not declared")]
    UndeclaredInput(String),
    #[error("input {name:?} declared twice with different shapes")]
    ConflictingDeclaration { name: String },
    #[error("input {0:?} has a zero dimension")]
    ZeroDimension(String),
    #[error("dimension mismatch at {0}")]
    DimensionMismatch(String),
    #[error("inversion of a non-square matrix at {0}")]
    NonSquareInversion(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Input(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Inv(Box<Expr>),
}

impl Expr {
    pub fn input(name: &str) -> Expr {
        Expr::Input(name.to_string())
    }
    pub fn add(l: Expr, r: Expr) -> Expr {
        Expr::Add(Box::new(l), Box::new(r))
    }
    pub fn sub(l: Expr, r: Expr) -> Expr {
        Expr::Sub(Box::new(l), Box::new(r))
    }
    pub fn mul(l: Expr, r: Expr) -> Expr {
        Expr::Mul(Box::new(l), Box::new(r))
    }
    pub fn inv(c: Expr) -> Expr {
        Expr::Inv(Box::new(c))
    }

    /// Leaves plus internal nodes.
    pub fn gate_count(&self) -> usize {
        match self {
            Expr::Input(_) => 1,
            Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) => {
                1 + l.gate_count() + r.gate_count()
            }
            Expr::Inv(c) => 1 + c.gate_count(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Expr::Input(_) => 1,
            Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) => l.leaf_count() + r.leaf_count(),
            Expr::Inv(c) => c.leaf_count(),
        }
    }

    pub fn inversion_count(&self) -> usize {
        match self {
            Expr::Input(_) => 0,
            Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) => {
                l.inversion_count() + r.inversion_count()
            }
            Expr::Inv(c) => 1 + c.inversion_count(),
        }
    }

    fn has_double_inversion(&self) -> bool {
        match self {
            Expr::Input(_) => false,
            Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) => {
                l.has_double_inversion() || r.has_double_inversion()
            }
            Expr::Inv(c) => matches!(**c, Expr::Inv(_)) || c.has_double_inversion(),
        }
    }

    fn collect_names<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Input(n) => out.push(n),
            Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) => {
                l.collect_names(out);
                r.collect_names(out);
            }
            Expr::Inv(c) => c.collect_names(out),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) => 2,
            Expr::Input(_) | Expr::Inv(_) => 3,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn side(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
            if paren {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Input(n) => write!(f, "{n}"),
            Expr::Inv(c) => write!(f, "inv({c})"),
            Expr::Add(l, r) | Expr::Sub(l, r) => {
                let op = if matches!(self, Expr::Add(..)) {
                    " + "
                } else {
                    " - "
                };
                side(f, l, l.precedence() < 1)?;
                write!(f, "{op}")?;
                side(f, r, r.precedence() <= 1)
            }
            Expr::Mul(l, r) => {
                side(f, l, l.precedence() < 2)?;
                write!(f, " * ")?;
                side(f, r, r.precedence() <= 2)
            }
        }
    }
}

pub type DimTable = BTreeMap<String, (usize, usize)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    pub root: Expr,
    pub dims: DimTable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Leaf {
    pub id: usize,
    pub name: String,
    pub shape: (usize, usize),
}

impl Formula {
    /// Builds a formula and checks that every leaf is declared.
    pub fn new(root: Expr, dims: DimTable) -> Result<Self, FormulaError> {
        let f = Formula { root, dims };
        f.check_declared()?;
        Ok(f)
    }

    pub fn parse(text: &str) -> Result<Self, FormulaError> {
        Parser::new(text).program()
    }

    fn check_declared(&self) -> Result<(), FormulaError> {
        let mut names = Vec::new();
        self.root.collect_names(&mut names);
        for n in names {
            match self.dims.get(n) {
                None => return Err(FormulaError::UndeclaredInput(n.to_string())),
                Some(&(r, c)) if r == 0 || c == 0 => {
                    return Err(FormulaError::ZeroDimension(n.to_string()))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    pub fn gate_count(&self) -> usize {
        self.root.gate_count()
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaf_count()
    }

    pub fn has_inversions(&self) -> bool {
        self.root.inversion_count() > 0
    }

    /// Shape of the formula's value, checking every gate.
    pub fn check_dims(&self) -> Result<(usize, usize), FormulaError> {
        Ok(self.gate_shapes()?[0].1)
    }

    /// Shape of every gate in pre-order, keyed by its path from the root
    /// (`root`, `root.left`, `root.right`, `root.child`, ...).
    pub fn gate_shapes(&self) -> Result<Vec<(String, (usize, usize))>, FormulaError> {
        let mut out = Vec::new();
        shape_of(&self.root, &self.dims, "root", &mut out)?;
        Ok(out)
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<Leaf> {
        let mut names = Vec::new();
        self.root.collect_names(&mut names);
        names
            .into_iter()
            .enumerate()
            .map(|(id, name)| Leaf {
                id,
                name: name.to_string(),
                shape: self.dims[name],
            })
            .collect()
    }
}

fn shape_of(
    e: &Expr,
    dims: &DimTable,
    path: &str,
    out: &mut Vec<(String, (usize, usize))>,
) -> Result<(usize, usize), FormulaError> {
    let slot = out.len();
    out.push((path.to_string(), (0, 0)));
    let shape = match e {
        Expr::Input(n) => *dims
            .get(n)
            .ok_or_else(|| FormulaError::UndeclaredInput(n.clone()))?,
        Expr::Add(l, r) | Expr::Sub(l, r) => {
            let a = shape_of(l, dims, &format!("{path}.left"), out)?;
            let b = shape_of(r, dims, &format!("{path}.right"), out)?;
            if a != b {
                return Err(FormulaError::DimensionMismatch(path.to_string()));
            }
            a
        }
        Expr::Mul(l, r) => {
            let a = shape_of(l, dims, &format!("{path}.left"), out)?;
            let b = shape_of(r, dims, &format!("{path}.right"), out)?;
            if a.1 != b.0 {
                return Err(FormulaError::DimensionMismatch(path.to_string()));
            }
            (a.0, b.1)
        }
        Expr::Inv(c) => {
            let a = shape_of(c, dims, &format!("{path}.child"), out)?;
            if a.0 != a.1 {
                return Err(FormulaError::NonSquareInversion(path.to_string()));
            }
            a
        }
    };
    out[slot].1 = shape;
    Ok(shape)
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, (r, c)) in &self.dims {
            write!(f, "{name}:{r}x{c}; ")?;
        }
        write!(f, "{}", self.root)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            src: text.as_bytes(),
            pos: 0,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), FormulaError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn ident(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let start = self.pos;
        if !self.src.get(start).is_some_and(u8::is_ascii_alphabetic) {
            return None;
        }
        let mut end = start + 1;
        while self
            .src
            .get(end)
            .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
        {
            end += 1;
        }
        self.pos = end;
        Some(std::str::from_utf8(&self.src[start..end]).expect("ascii"))
    }

    fn int(&mut self) -> Result<usize, FormulaError> {
        self.skip_ws();
        let start = self.pos;
        while self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected an integer");
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii")
            .parse()
            .or_else(|_| self.err("integer too large"))
    }

    /// True when the upcoming tokens are `IDENT ':'`.
    fn at_decl(&mut self) -> bool {
        let save = self.pos;
        let is_decl = self.ident().is_some() && self.peek() == Some(b':');
        self.pos = save;
        is_decl
    }

    fn program(&mut self) -> Result<Formula, FormulaError> {
        let mut dims = DimTable::new();
        while self.at_decl() {
            let name = self.ident().expect("checked by at_decl");
            if name == "inv" {
                return self.err("'inv' is reserved");
            }
            self.expect(b':')?;
            let r = self.int()?;
            self.skip_ws();
            if self.src.get(self.pos) != Some(&b'x') {
                return self.err("expected 'x' between dimensions");
            }
            self.pos += 1;
            let c = self.int()?;
            self.expect(b';')?;
            if r == 0 || c == 0 {
                return Err(FormulaError::ZeroDimension(name.to_string()));
            }
            if let Some(&old) = dims.get(name) {
                if old != (r, c) {
                    return Err(FormulaError::ConflictingDeclaration {
                        name: name.to_string(),
                    });
                }
            }
            dims.insert(name.to_string(), (r, c));
        }
        let root = self.expr()?;
        if self.peek().is_some() {
            return self.err("unexpected trailing input");
        }
        Formula::new(root, dims)
    }

    fn expr(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::add(lhs, self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            lhs = Expr::mul(lhs, self.factor()?);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, FormulaError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let name = self.ident().expect("starts with a letter");
                if name == "inv" {
                    self.expect(b'(')?;
                    let e = self.expr()?;
                    self.expect(b')')?;
                    Ok(Expr::inv(e))
                } else {
                    Ok(Expr::input(name))
                }
            }
            Some(_) => self.err("expected an input name, 'inv(' or '('"),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parameters for [`random_formula`].
#[derive(Debug, Clone, Copy)]
pub struct GenParams {
    /// Upper bound on the gate count.
    pub max_gates: usize,
    /// Upper bound on every dimension.
    pub max_dim: usize,
    /// Probability that a leaf reuses an existing name of the same shape.
    pub reuse_prob: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            max_gates: 6,
            max_dim: 4,
            reuse_prob: 0.25,
        }
    }
}

/// Random dimension-consistent formula with at most `max_gates` gates.
/// Never places an inversion directly above another inversion.
pub fn random_formula<R: Rng + ?Sized>(rng: &mut R, params: GenParams) -> Formula {
    assert!(params.max_gates >= 1 && params.max_dim >= 1);
    let budget = rng.random_range(1..=params.max_gates);
    let shape = (
        rng.random_range(1..=params.max_dim),
        rng.random_range(1..=params.max_dim),
    );
    let mut dims = DimTable::new();
    let root = gen(rng, &params, shape, budget, false, &mut dims);
    debug_assert!(!root.has_double_inversion());
    Formula { root, dims }
}

fn leaf_name(i: usize) -> String {
    if i < 26 {
        ((b'A' + i as u8) as char).to_string()
    } else {
        format!("M{i}")
    }
}

fn gen<R: Rng + ?Sized>(
    rng: &mut R,
    params: &GenParams,
    shape: (usize, usize),
    budget: usize,
    under_inv: bool,
    dims: &mut DimTable,
) -> Expr {
    let can_inv = shape.0 == shape.1 && !under_inv && budget >= 2;
    let can_bin = budget >= 3;
    if !can_inv && !can_bin {
        let reusable: Vec<&String> = dims
            .iter()
            .filter(|(_, &s)| s == shape)
            .map(|(n, _)| n)
            .collect();
        if !reusable.is_empty() && rng.random_bool(params.reuse_prob) {
            let pick = reusable[rng.random_range(0..reusable.len())].clone();
            return Expr::Input(pick);
        }
        let name = leaf_name(dims.len());
        dims.insert(name.clone(), shape);
        return Expr::Input(name);
    }
    // Inversion is only forced when no binary gate fits the budget.
    let choice = if can_bin && (!can_inv || rng.random_bool(0.75)) {
        rng.random_range(0..3)
    } else {
        3
    };
    if choice == 3 {
        return Expr::inv(gen(rng, params, shape, budget - 1, true, dims));
    }
    let left_budget = rng.random_range(1..=budget - 2);
    let right_budget = budget - 1 - left_budget;
    match choice {
        0 | 1 => {
            let l = gen(rng, params, shape, left_budget, false, dims);
            let r = gen(rng, params, shape, right_budget, false, dims);
            if choice == 0 {
                Expr::add(l, r)
            } else {
                Expr::sub(l, r)
            }
        }
        _ => {
            let k = rng.random_range(1..=params.max_dim);
            let l = gen(rng, params, (shape.0, k), left_budget, false, dims);
            let r = gen(rng, params, (k, shape.1), right_budget, false, dims);
            Expr::mul(l, r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parses_inverse() {
        let f = Formula::parse("A:1x1; B:1x1; inv(A)").unwrap();
        assert_eq!(f.root, Expr::inv(Expr::input("A")));
    }

    #[test]
    fn parses_with_precedence() {
        let f = Formula::parse("A:2x2; B:2x2; C:2x2; (A+B)*C").unwrap();
        assert_eq!(
            f.root,
            Expr::mul(
                Expr::add(Expr::input("A"), Expr::input("B")),
                Expr::input("C")
            )
        );
        let g = Formula::parse("A:2x2; B:2x2; C:2x2; A+B*C-A").unwrap();
        assert_eq!(
            g.root,
            Expr::sub(
                Expr::add(
                    Expr::input("A"),
                    Expr::mul(Expr::input("B"), Expr::input("C"))
                ),
                Expr::input("A")
            )
        );
    }

    #[test]
    fn rejects_bad_syntax() {
        assert!(matches!(
            Formula::parse("A:1x1; A+*A"),
            Err(FormulaError::Syntax { .. })
        ));
        assert!(matches!(
            Formula::parse("A:1x1; (A"),
            Err(FormulaError::Syntax { .. })
        ));
        assert!(matches!(
            Formula::parse("A:1x1; A A"),
            Err(FormulaError::Syntax { .. })
        ));
        assert!(matches!(
            Formula::parse("inv:1x1; A"),
            Err(FormulaError::Syntax { .. })
        ));
        assert_eq!(
            Formula::parse("A:1x1; B"),
            Err(FormulaError::UndeclaredInput("B".into()))
        );
        assert_eq!(
            Formula::parse("A:0x1; A"),
            Err(FormulaError::ZeroDimension("A".into()))
        );
        assert!(matches!(
            Formula::parse("A:1x1; A:2x2; A"),
            Err(FormulaError::ConflictingDeclaration { .. })
        ));
    }

    #[test]
    fn dimension_checks() {
        let f = Formula::parse("A:2x3; B:3x4; A*B").unwrap();
        assert_eq!(f.check_dims(), Ok((2, 4)));
        let g = Formula::parse("A:2x3; B:3x2; A+B").unwrap();
        assert_eq!(
            g.check_dims(),
            Err(FormulaError::DimensionMismatch("root".into()))
        );
        let h = Formula::parse("A:2x3; inv(A)").unwrap();
        assert_eq!(
            h.check_dims(),
            Err(FormulaError::NonSquareInversion("root".into()))
        );
        let k = Formula::parse("A:2x2; B:3x3; A*inv(A+B)").unwrap();
        assert_eq!(
            k.check_dims(),
            Err(FormulaError::DimensionMismatch("root.right.child".into()))
        );
    }

    #[test]
    fn leaves_in_order() {
        let f = Formula::parse("A:2x2; B:2x2; (A+B)*A").unwrap();
        let names: Vec<(usize, String)> = f.leaves().into_iter().map(|l| (l.id, l.name)).collect();
        assert_eq!(
            names,
            vec![(0, "A".into()), (1, "B".into()), (2, "A".into())]
        );
        assert_eq!(f.gate_count(), 5);
        let g = Formula::parse("A:1x1; inv(A)").unwrap();
        assert_eq!(g.leaves().len(), 1);
        assert_eq!(g.gate_count(), 2);
    }

    #[test]
    fn double_inversion_parses() {
        let f = Formula::parse("A:2x2; inv(inv(A))").unwrap();
        assert_eq!(f.check_dims(), Ok((2, 2)));
    }

    fn count_internal(e: &Expr) -> usize {
        match e {
            Expr::Input(_) => 0,
            Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) => {
                1 + count_internal(l) + count_internal(r)
            }
            Expr::Inv(c) => 1 + count_internal(c),
        }
    }

    proptest! {
        #[test]
        fn print_parse_roundtrip(seed in any::<u64>(), gates in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_formula(&mut rng, GenParams { max_gates: gates, max_dim: 4, reuse_prob: 0.3 });
            let text = f.to_string();
            prop_assert_eq!(Formula::parse(&text).unwrap(), f);
        }

        #[test]
        fn generator_invariants(seed in any::<u64>(), gates in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_formula(&mut rng, GenParams { max_gates: gates, max_dim: 4, reuse_prob: 0.3 });
            prop_assert!(f.check_dims().is_ok());
            prop_assert!(f.gate_count() <= gates);
            prop_assert_eq!(f.gate_count(), f.leaf_count() + count_internal(&f.root));
            prop_assert!(!f.root.has_double_inversion());
        }
    }
}
