use super::lexer::{Keyword, Token, TokenKind};
use super::ParseError;
use crate::ast::{
    Block, ClassDecl, Expr, InterfaceDecl, MethodDecl, Name, Operand, Pos, Program, Signature,
    Stmt, StmtKind, Type, Value, VarDecl, SYNTHETIC_PREFIX, VOID_RETURN,
};

pub struct Parser {
    tokens: Vec<Token>,
    at: usize,
    fresh: u32,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    pub fn new(tokens: Vec<Token>) -> Self {
        Self {
            tokens,
            at: 0,
            fresh: 0,
        }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn peek_at(&self, offset: usize) -> &TokenKind {
        let i = (self.at + offset).min(self.tokens.len() - 1);
        &self.tokens[i].kind
    }

    fn pos(&self) -> Pos {
        let t = self.peek();
        Pos::new(t.line, t.col)
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        let found = match t.kind {
            TokenKind::Eof => "end of input".to_string(),
            _ => format!("`{}`", t.lexeme),
        };
        ParseError::new(
            format!("unexpected {found}"),
            expected.iter().map(|s| s.to_string()).collect(),
            t.line,
            t.col,
        )
    }

    fn at_kw(&self, kw: Keyword) -> bool {
        self.peek().kind == TokenKind::Keyword(kw)
    }

    fn at_punct(&self, c: char) -> bool {
        self.peek().kind == TokenKind::Punct(c)
    }

    fn eat_kw(&mut self, kw: Keyword) -> bool {
        let hit = self.at_kw(kw);
        if hit {
            self.bump();
        }
        hit
    }

    fn eat_punct(&mut self, c: char) -> bool {
        let hit = self.at_punct(c);
        if hit {
            self.bump();
        }
        hit
    }

    fn expect_kw(&mut self, kw: Keyword) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{}`", kw.as_str())]))
        }
    }

    fn expect_punct(&mut self, c: char) -> PResult<()> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{c}`")]))
        }
    }

    fn ident(&mut self) -> PResult<Name> {
        if self.peek().kind == TokenKind::Ident {
            Ok(self.bump().lexeme)
        } else {
            Err(self.error(&["identifier"]))
        }
    }

    /// A variable reference: an identifier or `this`.
    fn var(&mut self) -> PResult<Name> {
        match self.peek().kind {
            TokenKind::Ident | TokenKind::Keyword(Keyword::This) => Ok(self.bump().lexeme),
            _ => Err(self.error(&["identifier", "`this`"])),
        }
    }

    /// An interface name, `Any` included.
    fn iface_name(&mut self) -> PResult<Name> {
        match self.peek().kind {
            TokenKind::Ident | TokenKind::Keyword(Keyword::Any) => Ok(self.bump().lexeme),
            _ => Err(self.error(&["interface name"])),
        }
    }

    fn iface_list(&mut self) -> PResult<Vec<Name>> {
        let mut names = vec![self.iface_name()?];
        while self.eat_punct(',') {
            names.push(self.iface_name()?);
        }
        Ok(names)
    }

    fn ident_list(&mut self) -> PResult<Vec<Name>> {
        let mut names = vec![self.ident()?];
        while self.eat_punct(',') {
            names.push(self.ident()?);
        }
        Ok(names)
    }

    fn var_list(&mut self, close: char) -> PResult<Vec<Name>> {
        let mut names = Vec::new();
        if self.at_punct(close) {
            return Ok(names);
        }
        names.push(self.var()?);
        while self.eat_punct(',') {
            names.push(self.var()?);
        }
        Ok(names)
    }

    pub fn program(mut self) -> PResult<Program> {
        let mut interfaces = Vec::new();
        let mut classes = Vec::new();
        loop {
            if self.at_kw(Keyword::Interface) {
                interfaces.push(self.interface()?);
            } else if self.at_kw(Keyword::Class) {
                classes.push(self.class()?);
            } else if self.at_punct('{') {
                break;
            } else {
                return Err(self.error(&["`interface`", "`class`", "main block"]));
            }
        }
        self.expect_punct('{')?;
        let main = self.block_contents()?;
        self.expect_punct('}')?;
        if self.peek().kind != TokenKind::Eof {
            return Err(self.error(&["end of input"]));
        }
        Ok(Program {
            interfaces,
            classes,
            main,
        })
    }

    fn interface(&mut self) -> PResult<InterfaceDecl> {
        let pos = self.pos();
        self.expect_kw(Keyword::Interface)?;
        let name = self.ident()?;
        let extends = if self.eat_kw(Keyword::Extends) {
            self.iface_list()?
        } else {
            Vec::new()
        };
        self.expect_punct('{')?;
        let mut signatures = Vec::new();
        while !self.eat_punct('}') {
            let (ret, is_void) = self.return_type()?;
            let sig_pos = self.pos();
            let name = self.ident()?;
            let params = self.params()?;
            self.expect_punct(';')?;
            signatures.push(Signature {
                ret,
                name,
                params,
                is_void,
                pos: sig_pos,
            });
        }
        Ok(InterfaceDecl {
            name,
            extends,
            signatures,
            pos,
        })
    }

    fn ty(&mut self) -> PResult<Type> {
        match self.peek().kind {
            TokenKind::Keyword(Keyword::Bool) => {
                self.bump();
                Ok(Type::Bool)
            }
            TokenKind::Keyword(Keyword::Any) => {
                self.bump();
                Ok(Type::Any)
            }
            TokenKind::Keyword(Keyword::Group) => {
                self.bump();
                self.expect_punct('<')?;
                let mut names = Vec::new();
                if !self.at_punct('>') {
                    names.push(self.ident()?);
                    while self.eat_punct(',') {
                        names.push(self.ident()?);
                    }
                }
                self.expect_punct('>')?;
                Ok(Type::group(names))
            }
            TokenKind::Ident => Ok(Type::Iface(self.bump().lexeme)),
            _ => Err(self.error(&["type"])),
        }
    }

    fn return_type(&mut self) -> PResult<(Type, bool)> {
        if self.eat_kw(Keyword::Void) {
            Ok((Type::Bool, true))
        } else {
            Ok((self.ty()?, false))
        }
    }

    fn params(&mut self) -> PResult<Vec<VarDecl>> {
        self.expect_punct('(')?;
        let mut params = Vec::new();
        if !self.at_punct(')') {
            loop {
                let ty = self.ty()?;
                params.push(VarDecl::new(ty, self.ident()?));
                if !self.eat_punct(',') {
                    break;
                }
            }
        }
        self.expect_punct(')')?;
        Ok(params)
    }

    fn class(&mut self) -> PResult<ClassDecl> {
        let pos = self.pos();
        self.expect_kw(Keyword::Class)?;
        let name = self.ident()?;
        let params = self.params()?;
        let implements = if self.eat_kw(Keyword::Implements) {
            self.iface_list()?
        } else {
            Vec::new()
        };
        self.expect_punct('{')?;
        let mut fields = Vec::new();
        let mut init: Option<Block> = None;
        let mut methods = Vec::new();
        while !self.eat_punct('}') {
            if self.at_punct('{') {
                if init.is_some() {
                    return Err(self.error(&["field", "method", "`}`"]));
                }
                self.bump();
                init = Some(self.block_contents()?);
                self.expect_punct('}')?;
                continue;
            }
            let (ty, is_void) = self.return_type()?;
            let member_pos = self.pos();
            let member = self.ident()?;
            if self.at_punct('(') {
                methods.push(self.method(ty, is_void, member, member_pos)?);
            } else if is_void {
                return Err(self.error(&["`(`"]));
            } else {
                fields.push(VarDecl::new(ty.clone(), member));
                while self.eat_punct(',') {
                    fields.push(VarDecl::new(ty.clone(), self.ident()?));
                }
                self.expect_punct(';')?;
            }
        }
        Ok(ClassDecl {
            name,
            params,
            implements,
            fields,
            init: init.unwrap_or(Block {
                locals: Vec::new(),
                body: Vec::new(),
            }),
            methods,
            pos,
        })
    }

    fn method(&mut self, ret: Type, is_void: bool, name: Name, pos: Pos) -> PResult<MethodDecl> {
        let params = self.params()?;
        self.expect_punct('{')?;
        let mut locals = self.decls()?;
        let body = self.stmts()?;
        let ret_var = if is_void {
            if self.eat_kw(Keyword::Return) {
                self.expect_punct(';')?;
            }
            locals.push(VarDecl::new(Type::Bool, VOID_RETURN));
            VOID_RETURN.to_string()
        } else {
            self.expect_kw(Keyword::Return)?;
            let x = self.var()?;
            self.expect_punct(';')?;
            x
        };
        self.expect_punct('}')?;
        Ok(MethodDecl {
            sig: Signature {
                ret,
                name,
                params,
                is_void,
                pos,
            },
            locals,
            body,
            ret: ret_var,
        })
    }

    fn at_decl(&self) -> bool {
        match self.peek_at(0) {
            TokenKind::Keyword(Keyword::Bool | Keyword::Any | Keyword::Group) => true,
            TokenKind::Ident => *self.peek_at(1) == TokenKind::Ident,
            _ => false,
        }
    }

    fn decls(&mut self) -> PResult<Vec<VarDecl>> {
        let mut decls = Vec::new();
        while self.at_decl() {
            let ty = self.ty()?;
            decls.push(VarDecl::new(ty.clone(), self.ident()?));
            while self.eat_punct(',') {
                decls.push(VarDecl::new(ty.clone(), self.ident()?));
            }
            self.expect_punct(';')?;
        }
        Ok(decls)
    }

    /// `decls stmts` inside braces; the braces are handled by the caller.
    fn block_contents(&mut self) -> PResult<Block> {
        let locals = self.decls()?;
        let body = self.stmts()?;
        Ok(Block { locals, body })
    }

    /// Statements up to (not including) a closing brace or `return`.
    fn stmts(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = Vec::new();
        while !self.at_punct('}') && !self.at_kw(Keyword::Return) {
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn braced(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_punct('{')?;
        let body = self.stmts()?;
        self.expect_punct('}')?;
        Ok(body)
    }

    fn else_block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_kw(Keyword::Else)?;
        self.braced()
    }

    fn fresh_alias(&mut self) -> Name {
        let name = format!("{SYNTHETIC_PREFIX}q{}", self.fresh);
        self.fresh += 1;
        name
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let pos = self.pos();
        let kind = match self.peek().kind {
            TokenKind::Keyword(Keyword::Skip) => {
                self.bump();
                self.expect_punct(';')?;
                StmtKind::Skip
            }
            TokenKind::Keyword(Keyword::If) => {
                self.bump();
                let cond = self.var()?;
                let then_branch = self.braced()?;
                let else_branch = if self.at_kw(Keyword::Else) {
                    self.else_block()?
                } else {
                    Vec::new()
                };
                self.eat_punct(';');
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                }
            }
            TokenKind::Keyword(Keyword::While) => {
                self.bump();
                let cond = self.var()?;
                let body = self.braced()?;
                self.eat_punct(';');
                StmtKind::While { cond, body }
            }
            TokenKind::Ident | TokenKind::Keyword(Keyword::This) => {
                let subject = self.var()?;
                self.subject_stmt(subject)?
            }
            _ => return Err(self.error(&["statement"])),
        };
        Ok(Stmt::new(kind, pos))
    }

    fn subject_stmt(&mut self, subject: Name) -> PResult<StmtKind> {
        match self.peek().kind {
            TokenKind::Punct('=') => {
                self.bump();
                let expr = self.expr()?;
                self.expect_punct(';')?;
                Ok(StmtKind::Assign {
                    target: subject,
                    expr,
                })
            }
            TokenKind::Keyword(Keyword::Joins) => {
                self.bump();
                let group = self.var()?;
                self.expect_kw(Keyword::As)?;
                let ifaces = self.ident_list()?;
                self.expect_punct(';')?;
                Ok(StmtKind::Join {
                    member: subject,
                    group,
                    ifaces,
                })
            }
            TokenKind::Keyword(Keyword::Leaves) => {
                self.bump();
                let group = self.var()?;
                self.expect_kw(Keyword::As)?;
                let ifaces = self.ident_list()?;
                let then_branch = self.braced()?;
                let else_branch = self.else_block()?;
                self.eat_punct(';');
                Ok(StmtKind::Leave {
                    member: subject,
                    group,
                    ifaces,
                    then_branch,
                    else_branch,
                })
            }
            TokenKind::Keyword(Keyword::SubtypeOf) => {
                self.bump();
                let iface = self.ident()?;
                let alias = if self.peek().kind == TokenKind::Ident {
                    self.bump().lexeme
                } else {
                    self.fresh_alias()
                };
                let then_branch = self.braced()?;
                let else_branch = self.else_block()?;
                self.eat_punct(';');
                Ok(StmtKind::SubtypeOf {
                    subject,
                    iface,
                    alias,
                    then_branch,
                    else_branch,
                })
            }
            _ => Err(self.error(&["`=`", "`joins`", "`leaves`", "`subtypeOf`"])),
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        match self.peek().kind {
            TokenKind::Keyword(Keyword::True) => {
                self.bump();
                Ok(Expr::Lit(Value::Bool(true)))
            }
            TokenKind::Keyword(Keyword::False) => {
                self.bump();
                Ok(Expr::Lit(Value::Bool(false)))
            }
            TokenKind::Keyword(Keyword::Newgroup) => {
                self.bump();
                Ok(Expr::NewGroup)
            }
            TokenKind::Keyword(Keyword::New) => {
                self.bump();
                let class = self.ident()?;
                self.expect_punct('(')?;
                let args = self.var_list(')')?;
                self.expect_punct(')')?;
                Ok(Expr::New { class, args })
            }
            TokenKind::Keyword(Keyword::Acquire) => {
                self.bump();
                let iface = self.iface_name()?;
                let within = if self.eat_kw(Keyword::In) {
                    Some(self.var()?)
                } else {
                    None
                };
                let except = if self.eat_kw(Keyword::Except) {
                    if self.eat_kw(Keyword::Emptyset) {
                        Vec::new()
                    } else {
                        let mut names = vec![self.var()?];
                        while self.eat_punct(',') {
                            names.push(self.var()?);
                        }
                        names
                    }
                } else {
                    Vec::new()
                };
                Ok(Expr::Acquire {
                    iface,
                    within,
                    except,
                })
            }
            TokenKind::Ident | TokenKind::Keyword(Keyword::This) => {
                let name = self.var()?;
                if self.eat_punct('.') {
                    let method = self.ident()?;
                    self.expect_punct('(')?;
                    let args = self.var_list(')')?;
                    self.expect_punct(')')?;
                    Ok(Expr::Call {
                        target: Operand::Var(name),
                        method,
                        args,
                    })
                } else {
                    Ok(Expr::Var(name))
                }
            }
            _ => Err(self.error(&["expression"])),
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::ast::{Expr, StmtKind, Type};
    use crate::parser::parse;

    #[test]
    fn interface_extending_any() {
        let p = parse("interface I extends Any {} { skip; }").unwrap();
        assert_eq!(p.interfaces[0].name, "I");
        assert_eq!(p.interfaces[0].extends, vec!["Any".to_string()]);
        assert!(p.interfaces[0].signatures.is_empty());
    }

    #[test]
    fn acquire_except_emptyset() {
        let p = parse("interface Dictionary {} { Dictionary d; d = acquire Dictionary except emptyset; }")
            .unwrap();
        let StmtKind::Assign { expr, .. } = &p.main.body[0].kind else {
            panic!("expected assignment");
        };
        assert_eq!(
            *expr,
            Expr::Acquire {
                iface: "Dictionary".into(),
                within: None,
                except: vec![],
            }
        );
    }

    #[test]
    fn group_types() {
        let p = parse("{ Group<> a; Group<B,A> b; }").unwrap();
        assert_eq!(p.main.locals[0].ty, Type::Group(Default::default()));
        assert_eq!(p.main.locals[1].ty, Type::group(["A", "B"]));
    }

    #[test]
    fn subtype_of_alias_generated_when_omitted() {
        let p = parse("interface I {} { Any x; x subtypeOf I { skip; } else { skip; } }").unwrap();
        let StmtKind::SubtypeOf { alias, .. } = &p.main.body[0].kind else {
            panic!("expected query");
        };
        assert!(crate::ast::is_synthetic(alias));
    }

    #[test]
    fn void_method_gets_hidden_return() {
        let p = parse("class C() { void go() { skip; return; } } { skip; }").unwrap();
        let m = &p.classes[0].methods[0];
        assert!(m.sig.is_void);
        assert_eq!(m.sig.ret, Type::Bool);
        assert_eq!(m.ret, crate::ast::VOID_RETURN);
        assert_eq!(m.locals.last().unwrap().name, crate::ast::VOID_RETURN);
    }

    #[test]
    fn errors_carry_expected_tokens() {
        let err = parse("{ x joins y I; }").unwrap_err();
        assert_eq!((err.line, err.col), (1, 13));
        assert_eq!(err.expected, vec!["`as`".to_string()]);
        let err = parse("class C() {").unwrap_err();
        assert!(err.message.contains("end of input"));
    }

    #[test]
    fn non_void_method_requires_return() {
        assert!(parse("class C() { Bool f() { Bool b; skip; } } { skip; }").is_err());
    }
}
