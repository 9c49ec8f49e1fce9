//! Recursive-descent parser for `.gaf` sources.
//!
//! Keywords are contextual: they are only recognised where the grammar
//! expects one, so a feature may legally be called `Feature` or `out`.

use crate::diagnostic::{codes, Diagnostic};
use crate::dsl::lexer::{tokenize, Token, TokenKind};
use crate::dsl::{Item, SourceUnit};
use crate::model::*;

/// Parse one source file. Stops at the first error.
pub fn parse_unit(text: &str, path: &str) -> Result<SourceUnit, Vec<Diagnostic>> {
    let lexed = tokenize(text).map_err(|e| vec![Diagnostic::error(codes::LEX_ERROR, path, e.loc, e.message)])?;
    let mut parser = Parser {
        tokens: lexed.tokens,
        pos: 0,
    };
    let items = parser
        .unit()
        .map_err(|e| vec![Diagnostic::error(codes::SYNTAX_ERROR, path, e.loc, e.message)])?;
    Ok(SourceUnit {
        path: path.to_string(),
        text: text.to_string(),
        header: lexed.header,
        items,
    })
}

struct SyntaxError {
    loc: Loc,
    message: String,
}

type PResult<T> = Result<T, SyntaxError>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_kind(&self) -> &TokenKind {
        &self.peek().kind
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if tok.kind != TokenKind::Eof {
            self.pos += 1;
        }
        tok
    }

    fn error<T>(&self, expected: &str) -> PResult<T> {
        let tok = self.peek();
        Err(SyntaxError {
            loc: tok.loc,
            message: format!("expected {expected}, found {}", tok.kind),
        })
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek_kind(), TokenKind::Ident(s) if s == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.error(&format!("`{kw}`"))
        }
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<Token> {
        if *self.peek_kind() == kind {
            Ok(self.advance())
        } else {
            self.error(&kind.to_string())
        }
    }

    fn eat(&mut self, kind: TokenKind) -> bool {
        if *self.peek_kind() == kind {
            self.advance();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek_kind() {
            TokenKind::Ident(name) => {
                let id = Ident::at(name.clone(), self.peek().loc);
                self.advance();
                Ok(id)
            }
            _ => self.error("identifier"),
        }
    }

    /// `IDENT ("," IDENT)*`
    fn ident_list(&mut self) -> PResult<Vec<Ident>> {
        let mut ids = vec![self.ident()?];
        while self.eat(TokenKind::Comma) {
            ids.push(self.ident()?);
        }
        Ok(ids)
    }

    fn unit(&mut self) -> PResult<Vec<Item>> {
        let mut items = Vec::new();
        loop {
            if *self.peek_kind() == TokenKind::Eof {
                return Ok(items);
            } else if self.eat_keyword("Database") {
                items.push(Item::Database(self.database()?));
            } else if self.eat_keyword("Configuration") {
                items.push(Item::Configuration(self.configuration()?));
            } else {
                return self.error("`Database` or `Configuration`");
            }
        }
    }

    fn database(&mut self) -> PResult<SoftwareDatabase> {
        let name = self.ident()?;
        self.expect(TokenKind::LBrace)?;
        let mut features = Vec::new();
        while !self.eat(TokenKind::RBrace) {
            self.expect_keyword("Feature")?;
            let id = self.ident()?;
            self.expect(TokenKind::Colon)?;
            let kind = match self.peek_kind() {
                TokenKind::Ident(k) => FeatureKind::from_keyword(k),
                _ => None,
            };
            let Some(kind) = kind else {
                return self.error("feature kind (`state`, `data`, `method` or `adapter`)");
            };
            self.advance();
            self.expect(TokenKind::Semi)?;
            features.push(FeatureDecl { id, kind });
        }
        Ok(SoftwareDatabase { name, features })
    }

    fn configuration(&mut self) -> PResult<SoftwareConfiguration> {
        let name = self.ident()?;
        self.expect_keyword("on")?;
        let database = self.ident()?;
        self.expect(TokenKind::LBrace)?;
        let mut config = SoftwareConfiguration {
            name,
            database,
            ..SoftwareConfiguration::new("", "")
        };
        while !self.eat(TokenKind::RBrace) {
            if self.eat_keyword("Features") {
                let ids = self.braced_ident_list()?;
                config.features.extend(ids);
            } else if self.eat_keyword("Events") {
                let ids = self.braced_ident_list()?;
                config.expected_events.extend(ids);
            } else if self.eat_keyword("Relations") {
                self.expect(TokenKind::LBrace)?;
                while !self.eat(TokenKind::RBrace) {
                    config.relations.relations.push(self.relation()?);
                }
            } else if self.eat_keyword("GAProg") {
                config.gaprogs.push(self.gaprog()?);
            } else if self.eat_keyword("Behavior") {
                config.behaviors.push(self.behavior()?);
            } else if self.eat_keyword("GAProc") {
                config.gaprocs.push(self.gaproc()?);
            } else if self.eat_keyword("Metamorphosis_Program") {
                config.metamorphoses.push(self.metaprog()?);
            } else {
                return self.error(
                    "a section (`Features`, `Events`, `Relations`, `GAProg`, `Behavior`, `GAProc`, `Metamorphosis_Program`) or `}`",
                );
            }
        }
        Ok(config)
    }

    /// `"{" IDENT ("," IDENT)* ";" "}"`
    fn braced_ident_list(&mut self) -> PResult<Vec<Ident>> {
        self.expect(TokenKind::LBrace)?;
        let ids = self.ident_list()?;
        self.expect(TokenKind::Semi)?;
        self.expect(TokenKind::RBrace)?;
        Ok(ids)
    }

    fn mode(&mut self) -> PResult<Mode> {
        if self.eat_keyword("Enable") {
            Ok(Mode::Enable)
        } else if self.eat_keyword("Disable") {
            Ok(Mode::Disable)
        } else {
            self.error("`Enable` or `Disable`")
        }
    }

    fn relation(&mut self) -> PResult<Relation> {
        let trigger_mode = self.mode()?;
        self.expect(TokenKind::LParen)?;
        let trigger = self.ident()?;
        self.expect(TokenKind::RParen)?;
        let verb = if self.eat_keyword("Implies") {
            Verb::Implies
        } else if self.eat_keyword("Excludes") {
            Verb::Excludes
        } else {
            return self.error("`Implies` or `Excludes`");
        };
        let target_mode = self.mode()?;
        self.expect(TokenKind::LParen)?;
        let target = self.ident()?;
        self.expect(TokenKind::RParen)?;
        self.expect(TokenKind::Semi)?;
        Ok(Relation {
            trigger_mode,
            trigger,
            verb,
            target_mode,
            target,
        })
    }

    fn gaprog(&mut self) -> PResult<GaProg> {
        let id = self.ident()?;
        self.expect(TokenKind::LBrace)?;
        let mut clauses = Vec::new();
        while !self.eat(TokenKind::RBrace) {
            let mode = self.mode()?;
            self.expect(TokenKind::LParen)?;
            let features = self.ident_list()?;
            self.expect(TokenKind::RParen)?;
            self.expect(TokenKind::Semi)?;
            clauses.push(GaClause { mode, features });
        }
        Ok(GaProg { id, clauses })
    }

    fn gaproc(&mut self) -> PResult<GaProc> {
        let id = self.ident()?;
        self.expect(TokenKind::LBrace)?;
        let mut clauses = Vec::new();
        loop {
            self.expect(TokenKind::LParen)?;
            self.expect_keyword("event")?;
            self.expect(TokenKind::Assign)?;
            let event = self.ident()?;
            self.expect(TokenKind::RParen)?;
            self.expect(TokenKind::Colon)?;
            let target = self.ident()?;
            let behavior = if self.eat(TokenKind::Comma) {
                Some(self.ident()?)
            } else {
                None
            };
            self.expect(TokenKind::Semi)?;
            clauses.push(ProcClause {
                event,
                target,
                behavior,
            });
            if self.eat(TokenKind::RBrace) {
                break;
            }
        }
        Ok(GaProc { id, clauses })
    }

    fn behavior(&mut self) -> PResult<Behavior> {
        let id = self.ident()?;
        self.expect(TokenKind::LBrace)?;
        let mut edges = Vec::new();
        loop {
            let from = self.ident()?;
            self.expect(TokenKind::Dash)?;
            let mut guards = Vec::new();
            while self.eat(TokenKind::LParen) {
                guards.push(self.cond()?);
                self.expect(TokenKind::RParen)?;
            }
            let to = self.ident()?;
            self.expect(TokenKind::Semi)?;
            edges.push(Edge { from, guards, to });
            if self.eat(TokenKind::RBrace) {
                break;
            }
        }
        Ok(Behavior { id, edges })
    }

    fn cond(&mut self) -> PResult<Condition> {
        let mut terms = vec![self.and_expr()?];
        while self.eat_keyword("or") {
            terms.push(self.and_expr()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Condition::Or(terms)
        })
    }

    fn and_expr(&mut self) -> PResult<Condition> {
        let mut terms = vec![self.not_expr()?];
        while self.eat_keyword("and") {
            terms.push(self.not_expr()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Condition::And(terms)
        })
    }

    fn not_expr(&mut self) -> PResult<Condition> {
        if self.eat_keyword("not") {
            Ok(Condition::Not(Box::new(self.atom()?)))
        } else {
            self.atom()
        }
    }

    fn atom(&mut self) -> PResult<Condition> {
        if self.eat(TokenKind::LParen) {
            let c = self.cond()?;
            self.expect(TokenKind::RParen)?;
            return Ok(c);
        }
        self.expect_keyword("out")?;
        let op = match self.peek_kind() {
            TokenKind::Op(sym) => RelOp::ALL.into_iter().find(|o| o.symbol() == *sym),
            _ => None,
        };
        let Some(op) = op else {
            return self.error("comparison operator");
        };
        self.advance();
        let lit = match self.peek_kind() {
            TokenKind::Int(i) => Literal::Int(*i),
            TokenKind::Str(s) => Literal::Str(s.clone()),
            _ => return self.error("integer or string literal"),
        };
        self.advance();
        Ok(Condition::Compare(op, lit))
    }

    fn metaprog(&mut self) -> PResult<MetamorphosisProgram> {
        let id = self.ident()?;
        self.expect(TokenKind::LBrace)?;
        for kw in ["Metamorphose", "to", "Configuration"] {
            self.expect_keyword(kw)?;
        }
        let target_configuration = self.ident()?;
        self.expect(TokenKind::Semi)?;
        for kw in ["At", "the", "Adaptation", "State"] {
            self.expect_keyword(kw)?;
        }
        let from_state = self.ident()?;
        for kw in ["to", "the", "Adaptation", "State"] {
            self.expect_keyword(kw)?;
        }
        let to_state = self.ident()?;
        self.expect(TokenKind::Semi)?;
        for kw in ["Information", "transition", "ensured", "by"] {
            self.expect_keyword(kw)?;
        }
        let transition_kind = if self.eat_keyword("function") {
            TransitionKind::Function
        } else if self.eat_keyword("procedure") {
            TransitionKind::Procedure
        } else {
            return self.error("`function` or `procedure`");
        };
        let transition_fn = self.ident()?;
        self.expect(TokenKind::Semi)?;
        self.expect(TokenKind::RBrace)?;
        Ok(MetamorphosisProgram {
            id,
            target_configuration,
            from_state,
            to_state,
            transition_kind,
            transition_fn,
        })
    }
}
