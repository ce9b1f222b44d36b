//! Front end for structured programs and the raw control-flow-graph format.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::lex::{Cursor, SyntaxError, Tok};
use crate::linear::{LinCon, LinExpr, Normalized, Rel};
use crate::logic::parse_lin_expr;

use super::{Command, CommandKind, LocId, ParameterizedProgram, ProgVar, ProgramError, VarDecl};

/// Parse a program in either the structured syntax or the raw `loc`/`init`/`edge` format.
pub fn parse_program(text: &str) -> Result<ParameterizedProgram, ProgramError> {
    let raw = text.lines().any(|l| {
        let l = l.trim_start();
        l.starts_with("edge ") || l.starts_with("loc ") || l.starts_with("init ")
    });
    let prog = if raw {
        parse_raw(text)?
    } else {
        parse_structured(text)?
    };
    prog.validate()?;
    Ok(prog)
}

#[derive(Default)]
struct Decls {
    globals: Vec<VarDecl>,
    locals: Vec<VarDecl>,
}

impl Decls {
    fn lookup(&self, cur: &Cursor, name: &str) -> Result<ProgVar, ProgramError> {
        if self.globals.iter().any(|d| d.name == name) {
            Ok(ProgVar::Global(name.into()))
        } else if self.locals.iter().any(|d| d.name == name) {
            Ok(ProgVar::Local(name.into()))
        } else {
            let (line, col) = cur.position();
            Err(ProgramError::Undeclared {
                name: name.into(),
                line,
                col,
            })
        }
    }

    /// `global int x [= k];` / `local int d [= k];`
    fn parse_decl(&mut self, cur: &mut Cursor) -> Result<bool, ProgramError> {
        let global = if cur.is_ident("global") {
            true
        } else if cur.is_ident("local") {
            false
        } else {
            return Ok(false);
        };
        cur.next();
        cur.expect_keyword("int")?;
        let (line, col) = cur.position();
        let name = cur.expect_ident()?;
        let init = if cur.eat_punct("=") {
            Some(cur.expect_int()?)
        } else {
            None
        };
        cur.expect_punct(";")?;
        if self
            .globals
            .iter()
            .chain(&self.locals)
            .any(|d| d.name == name)
        {
            return Err(ProgramError::Duplicate { name, line, col });
        }
        let d = VarDecl { name, init };
        if global {
            self.globals.push(d);
        } else {
            self.locals.push(d);
        }
        Ok(true)
    }
}

/// Shared reader for expressions/conditions/simple commands, resolving names via declarations.
struct Reader<'a> {
    decls: &'a Decls,
    /// First resolution failure; the expression parser only speaks `SyntaxError`.
    failure: Option<ProgramError>,
}

impl Reader<'_> {
    fn expr(&mut self, cur: &mut Cursor) -> Result<LinExpr<ProgVar>, ProgramError> {
        let decls = self.decls;
        let mut failure = None;
        let res = parse_lin_expr(cur, &mut |c: &mut Cursor| {
            let name = c.expect_ident()?;
            if c.is_punct("(") {
                return Err(c.error(format!("`{name}(...)` is not a linear term")));
            }
            match decls.lookup(c, &name) {
                Ok(v) => Ok(v),
                Err(e) => {
                    failure.get_or_insert(e);
                    Ok(ProgVar::Global(name.into()))
                }
            }
        });
        if let Some(e) = failure {
            self.failure.get_or_insert(e.clone());
            return Err(e);
        }
        Ok(res?)
    }

    /// `lhs rel rhs`, returning the constraint and the source text of both sides.
    fn cmp(
        &mut self,
        cur: &mut Cursor,
    ) -> Result<(LinExpr<ProgVar>, Rel, LinExpr<ProgVar>, String, String), ProgramError> {
        let m = cur.mark();
        let lhs = self.expr(cur)?;
        let lt = cur.text_since(m);
        let rel = crate::logic::parse_rel(cur)?;
        let m = cur.mark();
        let rhs = self.expr(cur)?;
        let rt = cur.text_since(m);
        Ok((lhs, rel, rhs, lt, rt))
    }

    fn var(&mut self, cur: &mut Cursor) -> Result<ProgVar, ProgramError> {
        let name = cur.expect_ident()?;
        self.decls.lookup(cur, &name)
    }

    /// A simple (non-control) statement without its trailing `;`. Returns `None` if
    /// the cursor is not at one.
    fn simple(&mut self, cur: &mut Cursor) -> Result<Option<(String, CommandKind)>, ProgramError> {
        let m = cur.mark();
        if cur.eat_ident("skip") {
            return Ok(Some(("skip".into(), CommandKind::Skip)));
        }
        if cur.eat_ident("assume") || cur.is_punct("[") {
            let bracket = cur.eat_punct("[");
            let (l, rel, r, lt, rt) = self.cmp(cur)?;
            if bracket {
                cur.expect_punct("]")?;
            }
            return Ok(Some((
                format!("[{lt}{}{rt}]", rel.symbol()),
                assume(&l, rel, &r),
            )));
        }
        if !matches!(cur.peek(), Some(Tok::Ident(_))) {
            return Ok(None);
        }
        let target = self.var(cur)?;
        if cur.eat_punct("++") || cur.eat_punct("--") {
            let step = if cur.text_since(m).ends_with("++") {
                1
            } else {
                -1
            };
            let mut e = LinExpr::var(target.clone());
            e.add_constant(step);
            return Ok(Some((
                cur.text_since(m),
                CommandKind::Assign(vec![(target, e)]),
            )));
        }
        cur.expect_punct("=")?;
        if (cur.is_ident("pos") || cur.is_ident("havoc"))
            && cur.peek_at(1) == Some(&Tok::Punct("("))
        {
            let lb = if cur.eat_ident("pos") {
                Some(1)
            } else {
                cur.next();
                None
            };
            cur.expect_punct("(")?;
            cur.expect_punct(")")?;
            return Ok(Some((cur.text_since(m), CommandKind::Havoc(target, lb))));
        }
        // `x = y++` / `x = y--`: read then bump, atomically.
        if matches!(cur.peek(), Some(Tok::Ident(_)))
            && matches!(
                cur.peek_at(1),
                Some(Tok::Punct("++")) | Some(Tok::Punct("--"))
            )
        {
            let src = self.var(cur)?;
            let step = if cur.eat_punct("++") {
                1
            } else {
                cur.next();
                -1
            };
            let mut bumped = LinExpr::var(src.clone());
            bumped.add_constant(step);
            let kind = if src == target {
                CommandKind::Assign(vec![(target, LinExpr::var(src))])
            } else {
                CommandKind::Assign(vec![(target, LinExpr::var(src.clone())), (src, bumped)])
            };
            return Ok(Some((cur.text_since(m), kind)));
        }
        let e = self.expr(cur)?;
        Ok(Some((
            cur.text_since(m),
            CommandKind::Assign(vec![(target, e)]),
        )))
    }
}

fn assume(l: &LinExpr<ProgVar>, rel: Rel, r: &LinExpr<ProgVar>) -> CommandKind {
    match LinCon::compare(l, rel, r) {
        Normalized::True => CommandKind::Skip,
        Normalized::False => CommandKind::Assume(None),
        Normalized::Con(c) => CommandKind::Assume(Some(c)),
    }
}

/// Incremental CFG construction with location merging.
struct Builder {
    next_loc: LocId,
    edges: Vec<(LocId, LocId, String, CommandKind)>,
    initial: LocId,
}

impl Builder {
    fn fresh(&mut self) -> LocId {
        self.next_loc += 1;
        self.next_loc
    }

    fn edge(&mut self, from: LocId, name: String, kind: CommandKind) -> LocId {
        let to = self.fresh();
        self.edges.push((from, to, name, kind));
        to
    }

    /// Identify location `gone` with `keep`.
    fn merge(&mut self, gone: LocId, keep: LocId) {
        if gone == keep {
            return;
        }
        for e in &mut self.edges {
            if e.0 == gone {
                e.0 = keep;
            }
            if e.1 == gone {
                e.1 = keep;
            }
        }
        if self.initial == gone {
            self.initial = keep;
        }
    }

    fn block(
        &mut self,
        cur: &mut Cursor,
        rd: &mut Reader,
        mut at: LocId,
    ) -> Result<LocId, ProgramError> {
        while !cur.is_punct("}") && !cur.at_end() {
            at = self.stmt(cur, rd, at)?;
        }
        Ok(at)
    }

    fn braced(
        &mut self,
        cur: &mut Cursor,
        rd: &mut Reader,
        at: LocId,
    ) -> Result<LocId, ProgramError> {
        cur.expect_punct("{")?;
        let end = self.block(cur, rd, at)?;
        cur.expect_punct("}")?;
        Ok(end)
    }

    /// Condition in parentheses; `None` for `true`.
    #[allow(clippy::type_complexity)]
    fn cond(
        &mut self,
        cur: &mut Cursor,
        rd: &mut Reader,
    ) -> Result<Option<((String, CommandKind), (String, CommandKind))>, ProgramError> {
        cur.expect_punct("(")?;
        if cur.eat_ident("true") {
            cur.expect_punct(")")?;
            return Ok(None);
        }
        let (l, rel, r, lt, rt) = rd.cmp(cur)?;
        cur.expect_punct(")")?;
        let pos = (format!("[{lt}{}{rt}]", rel.symbol()), assume(&l, rel, &r));
        let nrel = rel.negate();
        let neg = (format!("[{lt}{}{rt}]", nrel.symbol()), assume(&l, nrel, &r));
        Ok(Some((pos, neg)))
    }

    fn stmt(
        &mut self,
        cur: &mut Cursor,
        rd: &mut Reader,
        at: LocId,
    ) -> Result<LocId, ProgramError> {
        if cur.eat_ident("while") {
            let c = self.cond(cur, rd)?;
            match c {
                None => {
                    let end = self.braced(cur, rd, at)?;
                    if end == at {
                        // `while (true) {}` idles forever
                        self.edges.push((at, at, "skip".into(), CommandKind::Skip));
                    } else {
                        self.merge(end, at);
                    }
                    // code after an unconditional loop is unreachable
                    Ok(self.fresh())
                }
                Some(((pn, pk), (nn, nk))) => {
                    let body = self.edge(at, pn, pk);
                    let end = self.braced(cur, rd, body)?;
                    self.merge(end, at);
                    Ok(self.edge(at, nn, nk))
                }
            }
        } else if cur.eat_ident("if") {
            let c = self.cond(cur, rd)?;
            match c {
                None => {
                    let end = self.braced(cur, rd, at)?;
                    if cur.eat_ident("else") {
                        // dead branch: compile from an unreachable location
                        let dead = self.fresh();
                        self.braced(cur, rd, dead)?;
                    }
                    Ok(end)
                }
                Some(((pn, pk), (nn, nk))) => {
                    let then0 = self.edge(at, pn, pk);
                    let then_end = self.braced(cur, rd, then0)?;
                    let else0 = self.edge(at, nn, nk);
                    let else_end = if cur.eat_ident("else") {
                        self.braced(cur, rd, else0)?
                    } else {
                        else0
                    };
                    self.merge(else_end, then_end);
                    Ok(then_end)
                }
            }
        } else if cur.is_punct("{") {
            self.braced(cur, rd, at)
        } else {
            match rd.simple(cur)? {
                Some((name, kind)) => {
                    cur.expect_punct(";")?;
                    Ok(self.edge(at, name, kind))
                }
                None => Err(cur.unexpected("statement").into()),
            }
        }
    }
}

fn parse_structured(text: &str) -> Result<ParameterizedProgram, ProgramError> {
    let mut cur = Cursor::new(text)?;
    if cur.at_end() {
        return Err(cur.error("empty program").into());
    }
    let mut decls = Decls::default();
    while decls.parse_decl(&mut cur)? {}
    let mut b = Builder {
        next_loc: 0,
        edges: Vec::new(),
        initial: 0,
    };
    let start = b.fresh();
    b.initial = start;
    let mut rd = Reader {
        decls: &decls,
        failure: None,
    };
    b.block(&mut cur, &mut rd, start)?;
    if !cur.at_end() {
        return Err(cur.unexpected("statement").into());
    }
    Ok(finish(decls, b.initial, b.edges))
}

/// Prune assume edges into dead ends, renumber locations densely, and
/// disambiguate repeated command names.
fn finish(
    decls: Decls,
    initial: LocId,
    mut edges: Vec<(LocId, LocId, String, CommandKind)>,
) -> ParameterizedProgram {
    // An assume edge into a location without successors only contributes finite
    // traces; removing it changes no infinite behaviour and keeps the CFG small.
    loop {
        let has_out: BTreeSet<LocId> = edges.iter().map(|e| e.0).collect();
        let before = edges.len();
        edges.retain(|e| {
            !(matches!(e.3, CommandKind::Assume(_)) && !has_out.contains(&e.1) && e.1 != initial)
        });
        if edges.len() == before {
            break;
        }
    }
    let mut used: Vec<LocId> = std::iter::once(initial)
        .chain(edges.iter().flat_map(|e| [e.0, e.1]))
        .collect();
    used.sort_unstable();
    used.dedup();
    let renum: BTreeMap<LocId, LocId> = used.iter().enumerate().map(|(i, &l)| (l, i + 1)).collect();
    let mut commands = Vec::new();
    let (mut src, mut tgt) = (Vec::new(), Vec::new());
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (s, t, name, kind) in edges {
        let n = seen.entry(name.clone()).or_insert(0);
        *n += 1;
        let name = if *n == 1 { name } else { format!("{name}#{n}") };
        commands.push(Arc::new(Command {
            name: name.into(),
            kind,
        }));
        src.push(renum[&s]);
        tgt.push(renum[&t]);
    }
    ParameterizedProgram {
        globals: decls.globals,
        locals: decls.locals,
        num_locations: used.len(),
        initial: renum[&initial],
        commands,
        src,
        tgt,
    }
}

fn parse_raw(text: &str) -> Result<ParameterizedProgram, ProgramError> {
    let mut decls = Decls::default();
    let mut locs: Vec<i64> = Vec::new();
    let mut initial: Option<i64> = None;
    let mut raw_edges: Vec<(i64, i64, String, CommandKind, usize)> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let body = line
            .split("//")
            .next()
            .unwrap_or("")
            .split('#')
            .next()
            .unwrap_or("")
            .trim();
        if body.is_empty() {
            continue;
        }
        let at = |e: SyntaxError| SyntaxError {
            line: line_no,
            col: e.col,
            msg: e.msg,
        };
        let mut cur = Cursor::new(body).map_err(at)?;
        if decls
            .parse_decl(&mut cur)
            .map_err(|e| relocate(e, line_no))?
        {
            cur.expect_end().map_err(at)?;
            continue;
        }
        let kw = cur.expect_ident().map_err(at)?;
        match kw.as_str() {
            "loc" => {
                let l = cur.expect_int().map_err(at)?;
                cur.expect_end().map_err(at)?;
                if !locs.contains(&l) {
                    locs.push(l);
                }
            }
            "init" => {
                let l = cur.expect_int().map_err(at)?;
                cur.expect_end().map_err(at)?;
                if initial.replace(l).is_some() {
                    return Err(ProgramError::Cfg(format!("line {line_no}: second `init`")));
                }
            }
            "edge" => {
                let s = cur.expect_int().map_err(at)?;
                let t = cur.expect_int().map_err(at)?;
                let mut rd = Reader {
                    decls: &decls,
                    failure: None,
                };
                let (name, kind) = match rd.simple(&mut cur).map_err(|e| relocate(e, line_no))? {
                    Some(x) => x,
                    None => return Err(at(cur.unexpected("command")).into()),
                };
                cur.eat_punct(";");
                cur.expect_end().map_err(at)?;
                raw_edges.push((s, t, name, kind, line_no));
            }
            other => {
                return Err(at(SyntaxError {
                    line: 1,
                    col: 1,
                    msg: format!("unknown directive `{other}`"),
                })
                .into())
            }
        }
    }
    let initial = initial.ok_or_else(|| ProgramError::Cfg("missing `init` line".into()))?;
    let index: BTreeMap<i64, LocId> = locs.iter().enumerate().map(|(i, &l)| (l, i + 1)).collect();
    let find = |l: i64, line: usize| {
        index
            .get(&l)
            .copied()
            .ok_or_else(|| ProgramError::Cfg(format!("line {line}: undeclared location {l}")))
    };
    let init = find(initial, 0)?;
    let mut commands = Vec::new();
    let (mut src, mut tgt) = (Vec::new(), Vec::new());
    for (s, t, name, kind, line) in raw_edges {
        src.push(find(s, line)?);
        tgt.push(find(t, line)?);
        commands.push(Arc::new(Command {
            name: name.into(),
            kind,
        }));
    }
    Ok(ParameterizedProgram {
        globals: decls.globals,
        locals: decls.locals,
        num_locations: locs.len(),
        initial: init,
        commands,
        src,
        tgt,
    })
}

fn relocate(e: ProgramError, line: usize) -> ProgramError {
    match e {
        ProgramError::Syntax(s) => ProgramError::Syntax(SyntaxError { line, ..s }),
        ProgramError::Undeclared { name, col, .. } => ProgramError::Undeclared { name, line, col },
        ProgramError::Duplicate { name, col, .. } => ProgramError::Duplicate { name, line, col },
        other => other,
    }
}
