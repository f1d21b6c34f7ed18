//! Concrete syntax: protocol files (`.gp`), network state files (`.net`)
//! and side-effect files (`.fx`).
//!
//! Protocol files hold named definitions `Name = expr`; later definitions
//! may reference earlier ones, which are inlined at parse time, and the last
//! definition is the protocol the file denotes. Direction glyphs are `*`
//! (children), `^` (parent), `>` (neighbor) and `@` (self). A bare
//! expression without `Name =` is also accepted.
//!
//! `#` starts a line comment in all three formats. Parse errors carry the
//! line and column where parsing stopped.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::global::{ActionLabel, Direction, Protocol, RecVar, Summation, SyncAction};
use crate::state::{
    Assignment, CmpOp, Condition, CounterField, EffectRegistry, EffectSpec, Expr, Field,
    NetworkState, NodeId, NodeState, ParentRef,
};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

/// Words with fixed meaning in conditions or file structure; not usable as
/// node identifiers.
const RESERVED: &[&str] = &[
    "z", "inf", "t", "k", "a", "e", "parent", "true", "false", "tt", "ff", "and", "or", "not",
    "other", "rec",
];

fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word)
}

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    _text: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor {
            chars: text.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
            _text: text,
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn at_eof(&mut self) -> bool {
        self.skip_trivia();
        self.peek().is_none()
    }

    fn eat(&mut self, expected: char) -> Result<(), ParseError> {
        self.skip_trivia();
        match self.peek() {
            Some(c) if c == expected => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected '{expected}', found '{c}'"))),
            None => Err(self.error(format!("expected '{expected}', found end of input"))),
        }
    }

    fn try_eat(&mut self, expected: char) -> bool {
        self.skip_trivia();
        if self.peek() == Some(expected) {
            self.bump();
            true
        } else {
            false
        }
    }

    /// Reads a maximal nonempty identifier-or-number chunk.
    fn word(&mut self) -> Result<String, ParseError> {
        self.skip_trivia();
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                out.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if out.is_empty() {
            match self.peek() {
                Some(c) => Err(self.error(format!("expected identifier, found '{c}'"))),
                None => Err(self.error("expected identifier, found end of input")),
            }
        } else {
            Ok(out)
        }
    }

    /// Like [`Cursor::word`] but without skipping leading trivia; used where
    /// adjacency matters (a direction glyph binds tightly to its label).
    fn peek_word_here(&self) -> bool {
        matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_')
    }

    fn number(&mut self) -> Result<u64, ParseError> {
        let word = self.word()?;
        word.parse::<u64>()
            .map_err(|_| self.error(format!("expected a natural number, found '{word}'")))
    }
}

// ---------------------------------------------------------------------------
// conditions
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
enum Operand {
    FieldRef(Field),
    Number(String),
    Ident(String),
    Z,
    Inf,
}

fn parse_operand(cur: &mut Cursor) -> Result<Operand, ParseError> {
    let word = cur.word()?;
    Ok(match word.as_str() {
        "t" => Operand::FieldRef(Field::LinkStatus),
        "k" => Operand::FieldRef(Field::Capacity),
        "a" => Operand::FieldRef(Field::ActiveLinks),
        "e" => Operand::FieldRef(Field::FaultyLinks),
        "parent" => Operand::FieldRef(Field::Parent),
        "z" => Operand::Z,
        "inf" => Operand::Inf,
        _ if word.chars().all(|c| c.is_ascii_digit()) => Operand::Number(word),
        _ => Operand::Ident(word),
    })
}

fn parse_cmp_op(cur: &mut Cursor) -> Result<CmpOp, ParseError> {
    cur.skip_trivia();
    let first = cur
        .peek()
        .ok_or_else(|| cur.error("expected comparison operator"))?;
    match first {
        '=' => {
            cur.bump();
            if cur.peek() == Some('=') {
                cur.bump();
            }
            Ok(CmpOp::Eq)
        }
        '!' => {
            cur.bump();
            cur.eat('=')?;
            Ok(CmpOp::Ne)
        }
        '<' => {
            cur.bump();
            if cur.peek() == Some('=') {
                cur.bump();
                Ok(CmpOp::Le)
            } else {
                Ok(CmpOp::Lt)
            }
        }
        '>' => {
            cur.bump();
            if cur.peek() == Some('=') {
                cur.bump();
                Ok(CmpOp::Ge)
            } else {
                Ok(CmpOp::Gt)
            }
        }
        c => Err(cur.error(format!("expected comparison operator, found '{c}'"))),
    }
}

fn parse_condition_expr(cur: &mut Cursor) -> Result<Condition, ParseError> {
    let mut acc = parse_and(cur)?;
    loop {
        let save = (cur.pos, cur.line, cur.col);
        cur.skip_trivia();
        if cur.peek_word_here() {
            let word = cur.word()?;
            if word == "or" {
                let rhs = parse_and(cur)?;
                acc = Condition::or(acc, rhs);
                continue;
            }
        }
        (cur.pos, cur.line, cur.col) = save;
        return Ok(acc);
    }
}

fn parse_and(cur: &mut Cursor) -> Result<Condition, ParseError> {
    let mut acc = parse_not(cur)?;
    loop {
        let save = (cur.pos, cur.line, cur.col);
        cur.skip_trivia();
        if cur.peek_word_here() {
            let word = cur.word()?;
            if word == "and" {
                let rhs = parse_not(cur)?;
                acc = Condition::and(acc, rhs);
                continue;
            }
        }
        (cur.pos, cur.line, cur.col) = save;
        return Ok(acc);
    }
}

fn parse_not(cur: &mut Cursor) -> Result<Condition, ParseError> {
    cur.skip_trivia();
    if cur.peek_word_here() {
        let save = (cur.pos, cur.line, cur.col);
        let word = cur.word()?;
        match word.as_str() {
            "not" => return Ok(Condition::not(parse_not(cur)?)),
            "true" | "tt" => return Ok(Condition::True),
            "false" | "ff" => return Ok(Condition::False),
            _ => (cur.pos, cur.line, cur.col) = save,
        }
    }
    if cur.try_eat('(') {
        let inner = parse_condition_expr(cur)?;
        cur.eat(')')?;
        return Ok(inner);
    }
    parse_comparison(cur)
}

fn parse_comparison(cur: &mut Cursor) -> Result<Condition, ParseError> {
    let lhs = parse_operand(cur)?;
    let op = parse_cmp_op(cur)?;
    let rhs = parse_operand(cur)?;
    type_comparison(cur, lhs, op, rhs)
}

fn type_comparison(
    cur: &Cursor,
    lhs: Operand,
    op: CmpOp,
    rhs: Operand,
) -> Result<Condition, ParseError> {
    let parent_side = |o: &Operand| {
        matches!(
            o,
            Operand::FieldRef(Field::Parent) | Operand::Z | Operand::Inf
        ) || matches!(o, Operand::Ident(_))
    };
    if parent_side(&lhs) || parent_side(&rhs) {
        if !matches!(op, CmpOp::Eq | CmpOp::Ne) {
            return Err(cur.error("power sources can only be compared with == or !="));
        }
        let to_expr = |o: Operand| -> Result<Expr, ParseError> {
            Ok(match o {
                Operand::FieldRef(Field::Parent) => Expr::Field(Field::Parent),
                Operand::FieldRef(f) => {
                    return Err(cur.error(format!(
                        "field {f} cannot be compared against a power source"
                    )))
                }
                Operand::Z => Expr::Disconnected,
                Operand::Inf => Expr::Top,
                Operand::Ident(name) | Operand::Number(name) => Expr::Id(NodeId::new(name)),
            })
        };
        Ok(Condition::cmp(to_expr(lhs)?, op, to_expr(rhs)?))
    } else {
        let to_expr = |o: Operand| -> Result<Expr, ParseError> {
            Ok(match o {
                Operand::FieldRef(f) => Expr::Field(f),
                Operand::Number(n) => Expr::Nat(
                    n.parse::<u64>()
                        .map_err(|_| cur.error(format!("number '{n}' out of range")))?,
                ),
                Operand::Ident(name) => {
                    return Err(cur.error(format!(
                        "unknown field '{name}' (node identifiers only compare against parent)"
                    )))
                }
                Operand::Z | Operand::Inf => unreachable!("handled as parent comparison"),
            })
        };
        Ok(Condition::cmp(to_expr(lhs)?, op, to_expr(rhs)?))
    }
}

/// Parses a single condition; the whole input must be consumed.
pub fn parse_condition(text: &str) -> Result<Condition, ParseError> {
    let mut cur = Cursor::new(text);
    let cond = parse_condition_expr(&mut cur)?;
    if !cur.at_eof() {
        return Err(cur.error("trailing input after condition"));
    }
    Ok(cond)
}

// ---------------------------------------------------------------------------
// protocols
// ---------------------------------------------------------------------------

struct ProtocolParser<'a> {
    cur: Cursor<'a>,
    defs: Vec<(String, Protocol)>,
    bound: Vec<String>,
}

impl<'a> ProtocolParser<'a> {
    fn lookup_def(&self, name: &str) -> Option<&Protocol> {
        self.defs
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, p)| p)
    }

    fn parse_par(&mut self) -> Result<Protocol, ParseError> {
        let mut parts = vec![self.parse_sum()?];
        while self.cur.try_eat('|') {
            parts.push(self.parse_sum()?);
        }
        let mut it = parts.into_iter().rev();
        let last = it.next().expect("at least one operand");
        Ok(it.fold(last, |acc, p| Protocol::fork(p, acc)))
    }

    fn parse_sum(&mut self) -> Result<Protocol, ParseError> {
        let first = self.parse_prefix()?;
        if !self.peek_plus() {
            return Ok(first);
        }
        let mut branches = into_branches(&mut self.cur, first)?;
        while self.cur.try_eat('+') {
            let next = self.parse_prefix()?;
            branches.extend(into_branches(&mut self.cur, next)?);
        }
        Ok(Protocol::Sum(Summation::new(branches)))
    }

    fn peek_plus(&mut self) -> bool {
        self.cur.skip_trivia();
        self.cur.peek() == Some('+')
    }

    fn parse_prefix(&mut self) -> Result<Protocol, ParseError> {
        self.cur.skip_trivia();
        match self.cur.peek() {
            Some('(') => {
                self.cur.bump();
                let inner = self.parse_par()?;
                self.cur.eat(')')?;
                Ok(inner)
            }
            Some('<') => {
                self.cur.bump();
                let id = self.cur.word()?;
                if is_reserved(&id) {
                    return Err(self
                        .cur
                        .error(format!("'{id}' is reserved and cannot name a node")));
                }
                self.cur.eat('>')?;
                let body = self.parse_prefix()?;
                Ok(Protocol::active(NodeId::new(id), body))
            }
            Some(c) if c.is_ascii_alphanumeric() || c == '_' => {
                let word = self.cur.word()?;
                if word == "0" {
                    return Ok(Protocol::Nil);
                }
                if word == "rec" {
                    let var = self.cur.word()?;
                    self.cur.eat('.')?;
                    self.bound.push(var.clone());
                    let body = self.parse_prefix()?;
                    self.bound.pop();
                    return Ok(Protocol::rec(RecVar::new(var), body));
                }
                // a direction glyph immediately after the word makes it an
                // action label; otherwise it is a variable or a reference
                match self.cur.peek() {
                    Some(g @ ('*' | '^' | '>' | '@')) => {
                        self.cur.bump();
                        self.parse_action(word, g)
                    }
                    _ => {
                        if self.bound.iter().any(|b| b == &word) {
                            Ok(Protocol::Var(RecVar::new(word)))
                        } else if let Some(def) = self.lookup_def(&word) {
                            Ok(def.clone())
                        } else {
                            Err(self
                                .cur
                                .error(format!("unknown reference or unbound variable '{word}'")))
                        }
                    }
                }
            }
            Some(c) => Err(self
                .cur
                .error(format!("expected a protocol term, found '{c}'"))),
            None => Err(self
                .cur
                .error("expected a protocol term, found end of input")),
        }
    }

    fn parse_action(&mut self, label: String, glyph: char) -> Result<Protocol, ParseError> {
        if !label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') || label == "0" {
            return Err(self.cur.error(format!("invalid action label '{label}'")));
        }
        let dir = match glyph {
            '*' => Direction::Children,
            '^' => Direction::Parent,
            '>' => Direction::Neighbor,
            '@' => Direction::SelfLoop,
            _ => unreachable!(),
        };
        let mut out_cond = Condition::True;
        let mut in_cond = Condition::True;
        while self.cur.try_eat('[') {
            let role = self.cur.word()?;
            self.cur.eat(':')?;
            let cond = parse_condition_expr(&mut self.cur)?;
            self.cur.eat(']')?;
            match role.as_str() {
                "o" => out_cond = cond,
                "i" => in_cond = cond,
                _ => {
                    return Err(self.cur.error(format!(
                        "expected condition role 'o' or 'i', found '{role}'"
                    )))
                }
            }
        }
        self.cur.eat('.')?;
        let cont = self.parse_prefix()?;
        Ok(Protocol::sum(vec![SyncAction {
            label: ActionLabel::new(label),
            dir,
            out_cond,
            in_cond,
            cont,
        }]))
    }
}

fn into_branches(cur: &mut Cursor, p: Protocol) -> Result<Vec<SyncAction>, ParseError> {
    match p {
        Protocol::Sum(s) => Ok(s.into_branches()),
        _ => Err(cur.error("only synchronisation actions can appear in a summation")),
    }
}

/// Parses a protocol file into its named definitions, references inlined.
pub fn parse_protocol_defs(text: &str) -> Result<Vec<(String, Protocol)>, ParseError> {
    let mut parser = ProtocolParser {
        cur: Cursor::new(text),
        defs: Vec::new(),
        bound: Vec::new(),
    };

    parser.cur.skip_trivia();
    loop {
        if parser.cur.at_eof() {
            break;
        }
        let save = (parser.cur.pos, parser.cur.line, parser.cur.col);
        // a definition head is `Name =` (and not `==`)
        let is_def = match parser.cur.word() {
            Ok(name) => {
                parser.cur.skip_trivia();
                if parser.cur.peek() == Some('=') {
                    parser.cur.bump();
                    if parser.cur.peek() == Some('=') {
                        false
                    } else {
                        if parser.defs.iter().any(|(n, _)| n == &name) {
                            return Err(parser
                                .cur
                                .error(format!("protocol '{name}' is defined twice")));
                        }
                        let body = parser.parse_par()?;
                        parser.defs.push((name, body));
                        true
                    }
                } else {
                    false
                }
            }
            Err(_) => false,
        };
        if !is_def {
            (parser.cur.pos, parser.cur.line, parser.cur.col) = save;
            if parser.defs.is_empty() {
                // a bare expression file
                let body = parser.parse_par()?;
                if !parser.cur.at_eof() {
                    return Err(parser.cur.error("trailing input after protocol"));
                }
                return Ok(vec![("main".to_string(), body)]);
            }
            return Err(parser.cur.error("expected `Name = protocol` definition"));
        }
    }
    if parser.defs.is_empty() {
        return Err(parser.cur.error("empty protocol file"));
    }
    Ok(parser.defs)
}

/// Parses a protocol file and returns the protocol it denotes: the named
/// entry if given, otherwise the last definition.
pub fn parse_protocol_entry(text: &str, entry: Option<&str>) -> Result<Protocol, ParseError> {
    let defs = parse_protocol_defs(text)?;
    match entry {
        None => Ok(defs.into_iter().next_back().expect("nonempty defs").1),
        Some(name) => defs
            .into_iter()
            .find(|(n, _)| n == name)
            .map(|(_, p)| p)
            .ok_or_else(|| ParseError {
                line: 1,
                col: 1,
                message: format!("no definition named '{name}' in protocol file"),
            }),
    }
}

/// Parses a protocol file; the last definition is the result.
pub fn parse_protocol(text: &str) -> Result<Protocol, ParseError> {
    parse_protocol_entry(text, None)
}

// ---------------------------------------------------------------------------
// network states
// ---------------------------------------------------------------------------

/// Parses a network state file: one `{...}` record per node.
pub fn parse_network(text: &str) -> Result<NetworkState, ParseError> {
    let mut cur = Cursor::new(text);
    let mut nodes = Vec::new();
    while !cur.at_eof() {
        nodes.push(parse_node_record(&mut cur)?);
    }
    if nodes.is_empty() {
        return Err(cur.error("network file has no node records"));
    }
    NetworkState::from_nodes(nodes).map_err(|e| cur.error(e.to_string()))
}

fn parse_node_record(cur: &mut Cursor) -> Result<NodeState, ParseError> {
    cur.eat('{')?;
    let mut id: Option<NodeId> = None;
    let mut parent: Option<ParentRef> = None;
    let mut link_up: Option<bool> = None;
    let mut neighbors: Option<Vec<NodeId>> = None;
    let mut capacity: Option<u64> = None;
    let mut active_links: Option<u64> = None;
    let mut faulty_links: Option<u64> = None;

    loop {
        let key = cur.word()?;
        cur.eat(':')?;
        match key.as_str() {
            "id" => {
                let word = cur.word()?;
                if is_reserved(&word) {
                    return Err(cur.error(format!("'{word}' is reserved and cannot name a node")));
                }
                set_once(cur, &mut id, NodeId::new(word), "id")?;
            }
            "parent" => {
                let word = cur.word()?;
                let value = match word.as_str() {
                    "z" => ParentRef::Disconnected,
                    "inf" => ParentRef::Top,
                    _ if is_reserved(&word) => {
                        return Err(
                            cur.error(format!("'{word}' is reserved and cannot name a node"))
                        )
                    }
                    _ => ParentRef::Station(NodeId::new(word)),
                };
                set_once(cur, &mut parent, value, "parent")?;
            }
            "t" => {
                let n = cur.number()?;
                if n > 1 {
                    return Err(cur.error("t must be 0 or 1"));
                }
                set_once(cur, &mut link_up, n == 1, "t")?;
            }
            "neighbors" => {
                cur.eat('[')?;
                let mut list = Vec::new();
                if !cur.try_eat(']') {
                    loop {
                        let word = cur.word()?;
                        if is_reserved(&word) {
                            return Err(
                                cur.error(format!("'{word}' is reserved and cannot name a node"))
                            );
                        }
                        list.push(NodeId::new(word));
                        if cur.try_eat(']') {
                            break;
                        }
                        cur.eat(',')?;
                    }
                }
                set_once(cur, &mut neighbors, list, "neighbors")?;
            }
            "k" => {
                let n = cur.number()?;
                set_once(cur, &mut capacity, n, "k")?;
            }
            "a" => {
                let n = cur.number()?;
                set_once(cur, &mut active_links, n, "a")?;
            }
            "e" => {
                let n = cur.number()?;
                set_once(cur, &mut faulty_links, n, "e")?;
            }
            _ => return Err(cur.error(format!("unknown node record key '{key}'"))),
        }
        if cur.try_eat('}') {
            break;
        }
        cur.eat(',')?;
    }

    let missing = |cur: &Cursor, what: &str| cur.error(format!("node record is missing '{what}'"));
    Ok(NodeState {
        id: id.ok_or_else(|| missing(cur, "id"))?,
        parent: parent.ok_or_else(|| missing(cur, "parent"))?,
        link_up: link_up.ok_or_else(|| missing(cur, "t"))?,
        neighbors: neighbors
            .ok_or_else(|| missing(cur, "neighbors"))?
            .into_iter()
            .collect(),
        capacity: capacity.ok_or_else(|| missing(cur, "k"))?,
        active_links: active_links.ok_or_else(|| missing(cur, "a"))?,
        faulty_links: faulty_links.ok_or_else(|| missing(cur, "e"))?,
    })
}

fn set_once<T>(cur: &Cursor, slot: &mut Option<T>, value: T, what: &str) -> Result<(), ParseError> {
    if slot.is_some() {
        return Err(cur.error(format!("duplicate '{what}' in node record")));
    }
    *slot = Some(value);
    Ok(())
}

// ---------------------------------------------------------------------------
// effects
// ---------------------------------------------------------------------------

/// Parses a side-effect file: `effect LABEL { enabler {..} reactor {..} }`
/// blocks. Either section may be omitted.
pub fn parse_effects(text: &str) -> Result<EffectRegistry, ParseError> {
    let mut cur = Cursor::new(text);
    let mut registry = EffectRegistry::new();
    let mut seen = BTreeMap::new();
    while !cur.at_eof() {
        let keyword = cur.word()?;
        if keyword != "effect" {
            return Err(cur.error(format!("expected 'effect', found '{keyword}'")));
        }
        let label_word = cur.word()?;
        let label = ActionLabel::new(label_word.clone());
        if seen.insert(label_word.clone(), ()).is_some() {
            return Err(cur.error(format!("duplicate effect block for '{label_word}'")));
        }
        cur.eat('{')?;
        let mut spec = EffectSpec::default();
        let mut have_enabler = false;
        let mut have_reactor = false;
        while !cur.try_eat('}') {
            let section = cur.word()?;
            let assignments = parse_assignments(&mut cur)?;
            match section.as_str() {
                "enabler" => {
                    if have_enabler {
                        return Err(cur.error("duplicate enabler section"));
                    }
                    have_enabler = true;
                    spec.enabler = assignments;
                }
                "reactor" => {
                    if have_reactor {
                        return Err(cur.error("duplicate reactor section"));
                    }
                    have_reactor = true;
                    spec.reactor = assignments;
                }
                _ => {
                    return Err(cur.error(format!(
                        "expected 'enabler' or 'reactor', found '{section}'"
                    )))
                }
            }
        }
        registry.insert(label, spec);
    }
    Ok(registry)
}

fn parse_assignments(cur: &mut Cursor) -> Result<Vec<Assignment>, ParseError> {
    cur.eat('{')?;
    let mut out = Vec::new();
    while !cur.try_eat('}') {
        let target = cur.word()?;
        match target.as_str() {
            "parent" => {
                expect_op(cur, ":=")?;
                let value = cur.word()?;
                match value.as_str() {
                    "other" => out.push(Assignment::SetParentOther),
                    "z" => out.push(Assignment::SetParentDisconnected),
                    _ => return Err(cur.error("parent can only be set to 'other' or 'z'")),
                }
            }
            "t" => {
                expect_op(cur, ":=")?;
                let n = cur.number()?;
                if n > 1 {
                    return Err(cur.error("t must be 0 or 1"));
                }
                out.push(Assignment::SetLink(n == 1));
            }
            "k" | "a" | "e" => {
                let field = match target.as_str() {
                    "k" => CounterField::Capacity,
                    "a" => CounterField::ActiveLinks,
                    _ => CounterField::FaultyLinks,
                };
                let op = plus_or_minus(cur)?;
                let n = cur.number()?;
                if n != 1 {
                    return Err(cur.error("counters change by exactly 1"));
                }
                out.push(if op {
                    Assignment::Inc(field)
                } else {
                    Assignment::Dec(field)
                });
            }
            "neighbors" => {
                let op = plus_or_minus(cur)?;
                let value = cur.word()?;
                if value != "other" {
                    return Err(cur.error("neighbors only change by 'other'"));
                }
                out.push(if op {
                    Assignment::NeighborAddOther
                } else {
                    Assignment::NeighborRemoveOther
                });
            }
            _ => return Err(cur.error(format!("unknown assignment target '{target}'"))),
        }
    }
    Ok(out)
}

fn expect_op(cur: &mut Cursor, op: &str) -> Result<(), ParseError> {
    cur.skip_trivia();
    for expected in op.chars() {
        match cur.peek() {
            Some(c) if c == expected => {
                cur.bump();
            }
            _ => return Err(cur.error(format!("expected '{op}'"))),
        }
    }
    Ok(())
}

/// `true` for `+=`, `false` for `-=`.
fn plus_or_minus(cur: &mut Cursor) -> Result<bool, ParseError> {
    cur.skip_trivia();
    let sign = match cur.peek() {
        Some('+') => true,
        Some('-') => false,
        _ => return Err(cur.error("expected '+=' or '-='")),
    };
    cur.bump();
    cur.eat('=')?;
    Ok(sign)
}

// ---------------------------------------------------------------------------
// state graph edge list
// ---------------------------------------------------------------------------

impl fmt::Display for crate::semantics::StateGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "states {} edges {}",
            self.configs.len(),
            self.edges.len()
        )?;
        for edge in &self.edges {
            writeln!(f, "{} -> {} : {}", edge.from, edge.to, edge.kind)?;
        }
        let terminals: Vec<String> = self
            .terminal_states()
            .into_iter()
            .map(|i| i.to_string())
            .collect();
        writeln!(f, "terminal {}", terminals.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::global::well_formed;

    #[test]
    fn parses_the_simple_protocol() {
        let text =
            "Simple = rec X.( Locate*[o: e>0][i: e>0 or t==0].X + Recover^[o: t==0][i: true].0 )";
        let p = parse_protocol(text).unwrap();
        assert!(well_formed(&p).is_empty());
        let Protocol::Rec(x, body) = &p else {
            panic!("expected recursion")
        };
        assert_eq!(x.as_str(), "X");
        let Protocol::Sum(s) = &**body else {
            panic!("expected summation")
        };
        assert_eq!(s.branches().len(), 2);
        let locate = &s.branches()[0];
        assert_eq!(locate.label.as_str(), "Locate");
        assert_eq!(locate.dir, Direction::Children);
        assert_eq!(locate.cont, Protocol::Var(RecVar::new("X")));
        let recover = &s.branches()[1];
        assert_eq!(recover.dir, Direction::Parent);
        assert_eq!(recover.in_cond, Condition::True);
        assert_eq!(recover.cont, Protocol::Nil);
    }

    #[test]
    fn named_references_are_inlined() {
        let text = "A = f*[o: true][i: true].0\nB = <1>A\n";
        let p = parse_protocol(text).unwrap();
        let Protocol::Active(id, body) = &p else {
            panic!()
        };
        assert_eq!(id.as_str(), "1");
        assert!(matches!(**body, Protocol::Sum(_)));
    }

    #[test]
    fn later_definitions_shadow_nothing_and_unknowns_error() {
        let err = parse_protocol("B = <1>A\nA = f*.0\n").unwrap_err();
        assert!(err.message.contains("unknown reference"));
        assert_eq!(err.line, 1);
    }

    #[test]
    fn rec_binders_shadow_definitions() {
        // X refers to the binder, not the earlier definition
        let text = "X = f*.0\nMain = rec X.( g*[o: true][i: true].X )";
        let p = parse_protocol(text).unwrap();
        let Protocol::Rec(_, body) = &p else { panic!() };
        let Protocol::Sum(s) = &**body else { panic!() };
        assert_eq!(s.branches()[0].cont, Protocol::Var(RecVar::new("X")));
    }

    #[test]
    fn condition_defaults_and_order_freedom() {
        let p = parse_protocol("main = f*[i: e>0].0").unwrap();
        let Protocol::Sum(s) = &p else { panic!() };
        assert_eq!(s.branches()[0].out_cond, Condition::True);
        let q = parse_protocol("main = f*[i: e>0][o: t==1].0").unwrap();
        let Protocol::Sum(s) = &q else { panic!() };
        assert_ne!(s.branches()[0].out_cond, Condition::True);
    }

    #[test]
    fn sum_of_non_actions_is_rejected() {
        let err = parse_protocol("main = 0 + f*.0").unwrap_err();
        assert!(err.message.contains("summation"));
    }

    #[test]
    fn parse_errors_carry_positions() {
        let err = parse_protocol("main = rec X.(\n  f*[o: ???].X )").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.col > 1);
    }

    #[test]
    fn conditions_parse_with_precedence() {
        let c = parse_condition("e > 0 or t == 0 and k >= 2").unwrap();
        // and binds tighter than or
        let Condition::Or(_, rhs) = &c else {
            panic!("expected or at top")
        };
        assert!(matches!(**rhs, Condition::And(..)));

        let c2 = parse_condition("not (parent == inf) and parent != z").unwrap();
        assert!(matches!(c2, Condition::And(..)));
    }

    #[test]
    fn parent_comparisons_are_typed() {
        assert!(parse_condition("parent >= 3").is_err());
        assert!(parse_condition("k == z").is_err());
        assert!(parse_condition("k > unknown_field").is_err());
        let ok = parse_condition("parent == 6").unwrap();
        assert_eq!(
            ok,
            Condition::cmp(
                Expr::Field(Field::Parent),
                CmpOp::Eq,
                Expr::Id(NodeId::new("6"))
            )
        );
    }

    #[test]
    fn protocol_print_parse_round_trip() {
        let text = "Simple = rec X.( Locate*[o: e>0][i: e>0 or t==0].X + Recover^[o: t==0][i: true].0 )\nMain = <PS>(Simple | 0)";
        let p = parse_protocol(text).unwrap();
        let printed = p.to_string();
        let reparsed = parse_protocol(&printed).unwrap();
        assert_eq!(p, reparsed);
        assert_eq!(printed, reparsed.to_string());
    }

    #[test]
    fn parses_network_records() {
        let text = "\n# the three registers spelled out in the walkthrough\n{id: 3, parent: 2, t: 1, neighbors: [2, 4], k: 1, a: 1, e: 1}\n{id: 4, parent: 3, t: 0, neighbors: [3, 6], k: 1, a: 0, e: 0}\n{id: 6, parent: 7, t: 1, neighbors: [4, 5, 7], k: 2, a: 0, e: 0}\n{id: 2, parent: inf, t: 1, neighbors: [3], k: 1, a: 1, e: 1}\n{id: 5, parent: inf, t: 1, neighbors: [6], k: 0, a: 0, e: 0}\n{id: 7, parent: inf, t: 1, neighbors: [6], k: 1, a: 1, e: 0}\n";
        let delta = parse_network(text).unwrap();
        let three = delta.node(&NodeId::new("3")).unwrap();
        assert_eq!(three.parent, ParentRef::Station(NodeId::new("2")));
        assert!(three.link_up);
        assert_eq!(three.capacity, 1);
        let four = delta.node(&NodeId::new("4")).unwrap();
        assert!(!four.link_up);
    }

    #[test]
    fn network_round_trip_via_display() {
        let text = "{id: x, parent: z, t: 1, neighbors: [], k: 0, a: 0, e: 0}\n{id: y, parent: inf, t: 0, neighbors: [x], k: 2, a: 1, e: 1}\n";
        let delta = parse_network(text).unwrap();
        let printed = delta.to_string();
        assert_eq!(parse_network(&printed).unwrap(), delta);
    }

    #[test]
    fn isolated_node_with_empty_neighbors_is_valid() {
        let delta =
            parse_network("{id: lone, parent: z, t: 1, neighbors: [], k: 0, a: 0, e: 0}").unwrap();
        assert_eq!(
            delta.node(&NodeId::new("lone")).unwrap().parent,
            ParentRef::Disconnected
        );
    }

    #[test]
    fn network_invariant_violations_surface_as_parse_errors() {
        let err =
            parse_network("{id: x, parent: z, t: 1, neighbors: [], k: 1, a: 0, e: 2}").unwrap_err();
        assert!(err.message.contains("exceed capacity"));
    }

    #[test]
    fn parses_effects() {
        let text = "effect Recover {\n  enabler { parent := z  neighbors -= other }\n  reactor { e -= 1  a -= 1  k -= 1  neighbors -= other }\n}\neffect Power {\n  enabler { parent := other }\n  reactor { a += 1 }\n}\n";
        let reg = parse_effects(text).unwrap();
        let recover = reg.get(&ActionLabel::new("Recover")).unwrap();
        assert_eq!(
            recover.enabler,
            vec![
                Assignment::SetParentDisconnected,
                Assignment::NeighborRemoveOther
            ]
        );
        assert_eq!(recover.reactor.len(), 4);
        let power = reg.get(&ActionLabel::new("Power")).unwrap();
        assert_eq!(power.enabler, vec![Assignment::SetParentOther]);
        assert_eq!(
            power.reactor,
            vec![Assignment::Inc(CounterField::ActiveLinks)]
        );
    }

    #[test]
    fn effects_round_trip_via_display() {
        let text = "effect Recover {\n  enabler { parent := z }\n  reactor { e -= 1 }\n}\n";
        let reg = parse_effects(text).unwrap();
        assert_eq!(parse_effects(&reg.to_string()).unwrap(), reg);
    }

    #[test]
    fn effects_reject_bad_assignments() {
        assert!(parse_effects("effect F { enabler { k += 2 } }").is_err());
        assert!(parse_effects("effect F { enabler { parent := 5 } }").is_err());
        assert!(parse_effects("effect F { wrong { } }").is_err());
        assert!(parse_effects("effect F { } effect F { }").is_err());
    }
}
