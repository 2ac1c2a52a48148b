//! Controller code export: a decision tree becomes one nested-if C function.
//!
//! The emitted function takes the features as parameters and returns the
//! first allowed action of the leaf it reaches, so its behaviour coincides
//! with [`Determinized`](crate::view::Determinized) under the
//! lexicographic-first rule. Threshold comparisons are doubled
//! (`2 * x <= 13` instead of `x <= 6.5`) so the generated conditions stay
//! integral; the original threshold is kept in a comment. Formatting is
//! deterministic, suitable for golden-file tests.
//!
//! A small interpreter for exactly this dialect lives in [`interp`]; it
//! exists so tests can run the emitted text against the tree it came from
//! without a C toolchain.

use crate::strategy::FeatureKind;
use crate::tree::{DecisionTree, Node, Predicate};

/// Output dialect of [`export_code`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dialect {
    CLike,
}

/// Render the tree as a single pure C-like controller function.
pub fn export_code(tree: &DecisionTree, dialect: Dialect) -> String {
    let Dialect::CLike = dialect;
    let feature_idents: Vec<String> = unique_idents(
        tree.schema()
            .features()
            .iter()
            .map(|f| sanitize(&f.name, false)),
    );
    let action_idents: Vec<String> =
        unique_idents(tree.actions().iter().map(|a| sanitize(a, true)));

    let mut out = String::new();
    out.push_str("/* decision-tree controller */\n");
    out.push_str(&format!("enum action {{ {} }};\n\n", action_idents.join(", ")));
    out.push_str("enum action controller(");
    for (i, ident) in feature_idents.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str("double ");
        out.push_str(ident);
    }
    out.push_str(") {\n");
    emit_node(
        tree,
        tree.root(),
        1,
        &feature_idents,
        &action_idents,
        &mut out,
    );
    out.push_str("}\n");
    out
}

fn emit_node(
    tree: &DecisionTree,
    id: usize,
    depth: usize,
    features: &[String],
    actions: &[String],
    out: &mut String,
) {
    let pad = "    ".repeat(depth);
    match tree.node(id) {
        Node::Leaf { stats } => {
            let first = stats
                .pure_actions()
                .first()
                .expect("exported trees have a pure action in every leaf");
            out.push_str(&format!("{pad}return {};\n", actions[first]));
        }
        Node::Inner {
            predicate,
            left,
            right,
        } => {
            match *predicate {
                Predicate::Le { feature, threshold } => {
                    let doubled = 2.0 * threshold;
                    debug_assert_eq!(doubled.fract(), 0.0, "thresholds are half-integral");
                    out.push_str(&format!(
                        "{pad}if (2 * {} <= {}) {{ /* {} <= {} */\n",
                        features[feature], doubled as i64, features[feature], threshold
                    ));
                }
                Predicate::Eq { feature, value } => {
                    out.push_str(&format!(
                        "{pad}if ({} == {}) {{\n",
                        features[feature], value
                    ));
                }
            }
            emit_node(tree, *left, depth + 1, features, actions, out);
            out.push_str(&format!("{pad}}} else {{\n"));
            emit_node(tree, *right, depth + 1, features, actions, out);
            out.push_str(&format!("{pad}}}\n"));
        }
    }
}

fn sanitize(name: &str, upper: bool) -> String {
    let mut s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    if s.chars().next().is_none_or(|c| c.is_ascii_digit()) {
        s.insert(0, '_');
    }
    if upper {
        s.make_ascii_uppercase();
    } else {
        s.make_ascii_lowercase();
    }
    s
}

fn unique_idents(iter: impl Iterator<Item = String>) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    iter.map(|base| {
        let mut candidate = base.clone();
        let mut i = 2;
        while !seen.insert(candidate.clone()) {
            candidate = format!("{base}_{i}");
            i += 1;
        }
        candidate
    })
    .collect()
}

/// Check that a tree is exportable: every leaf must have a pure action.
pub fn exportable(tree: &DecisionTree) -> bool {
    tree.preorder().iter().all(|&id| match tree.node(id) {
        Node::Leaf { stats } => !stats.pure_actions().is_empty(),
        Node::Inner { predicate, .. } => matches!(
            (predicate, &tree.schema().feature(predicate.feature()).kind),
            (Predicate::Le { .. }, FeatureKind::Ordered { .. })
                | (Predicate::Eq { .. }, FeatureKind::Categorical { .. })
        ),
    })
}

pub mod interp {
    //! Parser and evaluator for the emitted controller dialect.

    use thiserror::Error;

    #[derive(Debug, Error)]
    pub enum InterpError {
        #[error("parse error at token {at}: {msg}")]
        Parse { at: usize, msg: String },
        #[error("unknown parameter {0:?}")]
        UnknownParam(String),
        #[error("evaluation needs {want} inputs, got {got}")]
        BadArity { want: usize, got: usize },
    }

    #[derive(Debug, Clone, PartialEq)]
    enum Token {
        Ident(String),
        Int(i64),
        Sym(&'static str),
    }

    #[derive(Debug)]
    enum Stmt {
        Return(usize),
        If {
            cond: Cond,
            then: Box<Stmt>,
            els: Box<Stmt>,
        },
    }

    #[derive(Debug)]
    enum Cond {
        /// `2 * param <= rhs`
        DoubledLe { param: usize, rhs: i64 },
        /// `param == rhs`
        Eq { param: usize, rhs: i64 },
    }

    /// A parsed controller: parameter names in order, action names in enum
    /// order, and the statement tree.
    pub struct Controller {
        params: Vec<String>,
        actions: Vec<String>,
        body: Stmt,
    }

    impl Controller {
        pub fn params(&self) -> &[String] {
            &self.params
        }

        pub fn actions(&self) -> &[String] {
            &self.actions
        }

        /// Run the controller on a point (parameter order). Returns the
        /// index of the returned action in the emitted enum.
        pub fn eval(&self, point: &[f64]) -> Result<usize, InterpError> {
            if point.len() != self.params.len() {
                return Err(InterpError::BadArity {
                    want: self.params.len(),
                    got: point.len(),
                });
            }
            let mut stmt = &self.body;
            loop {
                match stmt {
                    Stmt::Return(a) => return Ok(*a),
                    Stmt::If { cond, then, els } => {
                        let holds = match cond {
                            Cond::DoubledLe { param, rhs } => {
                                2.0 * point[*param] <= *rhs as f64
                            }
                            Cond::Eq { param, rhs } => point[*param] == *rhs as f64,
                        };
                        stmt = if holds { then } else { els };
                    }
                }
            }
        }
    }

    fn tokenize(src: &str) -> Result<Vec<Token>, InterpError> {
        let mut tokens = Vec::new();
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            if c.is_whitespace() {
                i += 1;
            } else if c == '/' && bytes.get(i + 1) == Some(&b'*') {
                // comment
                let end = src[i + 2..].find("*/").ok_or(InterpError::Parse {
                    at: i,
                    msg: "unterminated comment".into(),
                })?;
                i += end + 4;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push(Token::Ident(src[start..i].to_string()));
            } else if c.is_ascii_digit() || (c == '-' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit())) {
                let start = i;
                i += 1;
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                }
                tokens.push(Token::Int(src[start..i].parse().map_err(|e| {
                    InterpError::Parse {
                        at: start,
                        msg: format!("bad integer: {e}"),
                    }
                })?));
            } else {
                let sym = match c {
                    '{' => "{",
                    '}' => "}",
                    '(' => "(",
                    ')' => ")",
                    ';' => ";",
                    ',' => ",",
                    '*' => "*",
                    '=' if bytes.get(i + 1) == Some(&b'=') => "==",
                    '<' if bytes.get(i + 1) == Some(&b'=') => "<=",
                    _ => {
                        return Err(InterpError::Parse {
                            at: i,
                            msg: format!("unexpected character {c:?}"),
                        })
                    }
                };
                i += sym.len();
                tokens.push(Token::Sym(sym));
            }
        }
        Ok(tokens)
    }

    struct Parser {
        tokens: Vec<Token>,
        pos: usize,
    }

    impl Parser {
        fn peek(&self) -> Option<&Token> {
            self.tokens.get(self.pos)
        }

        fn next(&mut self) -> Result<Token, InterpError> {
            let t = self.tokens.get(self.pos).cloned().ok_or(InterpError::Parse {
                at: self.pos,
                msg: "unexpected end of input".into(),
            })?;
            self.pos += 1;
            Ok(t)
        }

        fn expect_sym(&mut self, sym: &str) -> Result<(), InterpError> {
            match self.next()? {
                Token::Sym(s) if s == sym => Ok(()),
                other => Err(InterpError::Parse {
                    at: self.pos - 1,
                    msg: format!("expected {sym:?}, got {other:?}"),
                }),
            }
        }

        fn expect_ident(&mut self) -> Result<String, InterpError> {
            match self.next()? {
                Token::Ident(s) => Ok(s),
                other => Err(InterpError::Parse {
                    at: self.pos - 1,
                    msg: format!("expected identifier, got {other:?}"),
                }),
            }
        }

        fn expect_keyword(&mut self, kw: &str) -> Result<(), InterpError> {
            let got = self.expect_ident()?;
            if got == kw {
                Ok(())
            } else {
                Err(InterpError::Parse {
                    at: self.pos - 1,
                    msg: format!("expected keyword {kw:?}, got {got:?}"),
                })
            }
        }

        fn expect_int(&mut self) -> Result<i64, InterpError> {
            match self.next()? {
                Token::Int(v) => Ok(v),
                other => Err(InterpError::Parse {
                    at: self.pos - 1,
                    msg: format!("expected integer, got {other:?}"),
                }),
            }
        }

        fn stmt(
            &mut self,
            params: &[String],
            actions: &[String],
        ) -> Result<super::interp::Stmt, InterpError> {
            match self.next()? {
                Token::Ident(kw) if kw == "return" => {
                    let name = self.expect_ident()?;
                    self.expect_sym(";")?;
                    let idx = actions.iter().position(|a| *a == name).ok_or_else(|| {
                        InterpError::Parse {
                            at: self.pos - 2,
                            msg: format!("unknown action {name:?}"),
                        }
                    })?;
                    Ok(Stmt::Return(idx))
                }
                Token::Ident(kw) if kw == "if" => {
                    self.expect_sym("(")?;
                    let cond = self.cond(params)?;
                    self.expect_sym(")")?;
                    self.expect_sym("{")?;
                    let then = self.stmt(params, actions)?;
                    self.expect_sym("}")?;
                    self.expect_keyword("else")?;
                    self.expect_sym("{")?;
                    let els = self.stmt(params, actions)?;
                    self.expect_sym("}")?;
                    Ok(Stmt::If {
                        cond,
                        then: Box::new(then),
                        els: Box::new(els),
                    })
                }
                other => Err(InterpError::Parse {
                    at: self.pos - 1,
                    msg: format!("expected statement, got {other:?}"),
                }),
            }
        }

        fn cond(&mut self, params: &[String]) -> Result<Cond, InterpError> {
            match self.next()? {
                Token::Int(2) => {
                    self.expect_sym("*")?;
                    let name = self.expect_ident()?;
                    let param = param_index(params, &name)?;
                    self.expect_sym("<=")?;
                    let rhs = self.expect_int()?;
                    Ok(Cond::DoubledLe { param, rhs })
                }
                Token::Ident(name) => {
                    let param = param_index(params, &name)?;
                    self.expect_sym("==")?;
                    let rhs = self.expect_int()?;
                    Ok(Cond::Eq { param, rhs })
                }
                other => Err(InterpError::Parse {
                    at: self.pos - 1,
                    msg: format!("expected condition, got {other:?}"),
                }),
            }
        }
    }

    fn param_index(params: &[String], name: &str) -> Result<usize, InterpError> {
        params
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| InterpError::UnknownParam(name.to_string()))
    }

    /// Parse emitted controller source.
    pub fn parse(src: &str) -> Result<Controller, InterpError> {
        let mut p = Parser {
            tokens: tokenize(src)?,
            pos: 0,
        };
        // enum action { A, B, ... };
        p.expect_keyword("enum")?;
        p.expect_keyword("action")?;
        p.expect_sym("{")?;
        let mut actions = Vec::new();
        loop {
            actions.push(p.expect_ident()?);
            match p.next()? {
                Token::Sym(",") => continue,
                Token::Sym("}") => break,
                other => {
                    return Err(InterpError::Parse {
                        at: p.pos - 1,
                        msg: format!("expected ',' or '}}', got {other:?}"),
                    })
                }
            }
        }
        p.expect_sym(";")?;
        // enum action controller(double a, double b) { ... }
        p.expect_keyword("enum")?;
        p.expect_keyword("action")?;
        p.expect_ident()?; // function name
        p.expect_sym("(")?;
        let mut params = Vec::new();
        if p.peek() != Some(&Token::Sym(")")) {
            loop {
                p.expect_keyword("double")?;
                params.push(p.expect_ident()?);
                match p.next()? {
                    Token::Sym(",") => continue,
                    Token::Sym(")") => break,
                    other => {
                        return Err(InterpError::Parse {
                            at: p.pos - 1,
                            msg: format!("expected ',' or ')', got {other:?}"),
                        })
                    }
                }
            }
        } else {
            p.next()?;
        }
        p.expect_sym("{")?;
        let body = p.stmt(&params, &actions)?;
        p.expect_sym("}")?;
        Ok(Controller {
            params,
            actions,
            body,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::{FeatureSchema, StrategyTable};
    use crate::tree::{learn, tests::toy_table, LeafStats, Node};
    use crate::view::{Determinized, DeterminizeRule};

    #[test]
    fn single_leaf_tree_returns_constant() {
        let schema = FeatureSchema::ordered(&[("x", 0, 9)]);
        let nodes = vec![Node::Leaf {
            stats: LeafStats::new(vec![(0, 4), (4, 0), (4, 0)]).unwrap(),
        }];
        let tree = DecisionTree::from_parts(
            schema,
            vec!["dec".into(), "neu".into(), "acc".into()],
            nodes,
            0,
        )
        .unwrap();
        let code = export_code(&tree, Dialect::CLike);
        assert!(code.contains("return DEC;"), "{code}");
        let ctrl = interp::parse(&code).unwrap();
        assert_eq!(ctrl.eval(&[3.0]).unwrap(), 0);
    }

    #[test]
    fn toy_tree_emits_three_conditionals_four_returns() {
        let tree = learn(&toy_table(), 2).unwrap();
        let code = export_code(&tree, Dialect::CLike);
        assert_eq!(code.matches("if (").count(), 3);
        assert_eq!(code.matches("return ").count(), 4);
        // thresholds doubled, originals in comments
        assert!(code.contains("2 * distance <= 12) { /* distance <= 6 */"), "{code}");
        assert!(code.contains("2 * distance <= 45) { /* distance <= 22.5 */"), "{code}");
    }

    #[test]
    fn interpreter_matches_lexicographic_determinization() {
        let table = toy_table();
        let tree = learn(&table, 2).unwrap();
        let code = export_code(&tree, Dialect::CLike);
        let ctrl = interp::parse(&code).unwrap();
        let mut lex = Determinized::new(&tree, DeterminizeRule::LexicographicFirst);
        for (config, _) in table.rows() {
            let point: Vec<f64> = config.iter().map(|&v| v as f64).collect();
            let want = lex.pick(&point).unwrap();
            let got = ctrl.eval(&point).unwrap();
            assert_eq!(got, want, "at {point:?}");
        }
    }

    #[test]
    fn categorical_predicates_emit_plain_equality() {
        use crate::strategy::{Feature, FeatureKind};
        let schema = FeatureSchema::new(vec![Feature {
            name: "mode".into(),
            kind: FeatureKind::Categorical { values: vec![-2, 0, 2] },
        }])
        .unwrap();
        let mut t = StrategyTable::new(schema, vec!["a".into(), "b".into()]).unwrap();
        t.insert_named(vec![-2], &["a"]).unwrap();
        t.insert_named(vec![0], &["b"]).unwrap();
        t.insert_named(vec![2], &["b"]).unwrap();
        let tree = learn(&t, 2).unwrap();
        let code = export_code(&tree, Dialect::CLike);
        assert!(code.contains("if (mode == -2) {"), "{code}");
        let ctrl = interp::parse(&code).unwrap();
        assert_eq!(ctrl.eval(&[-2.0]).unwrap(), 0);
        assert_eq!(ctrl.eval(&[0.0]).unwrap(), 1);
        assert_eq!(ctrl.eval(&[2.0]).unwrap(), 1);
    }

    #[test]
    fn identifier_sanitization_keeps_names_unique() {
        let code_names = unique_idents(
            ["a b".to_string(), "a_b".to_string(), "2x".to_string()]
                .into_iter()
                .map(|s| sanitize(&s, false)),
        );
        assert_eq!(code_names.len(), 3);
        assert_eq!(code_names[0], "a_b");
        assert_eq!(code_names[1], "a_b_2");
        assert_eq!(code_names[2], "_2x");
    }
}
