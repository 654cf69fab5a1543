use super::context::{branch_effect, Effect, TypingContext};
use super::error::{Rule, TypeError};
use super::subtype::is_subtype;
use crate::ast::{
    Block, ClassDecl, ClassTable, Expr, MethodDecl, Name, ObjId, Operand, Pos, Stmt, StmtKind,
    Type, Value,
};
use std::collections::BTreeSet;

/// Types of the runtime-only expression forms. Supplied by the runtime type
/// checker; the static checker rejects these forms.
pub trait RuntimeTyping {
    /// Type of an object or group identity.
    fn value_type(&self, value: &Value) -> Option<Type>;
    /// Type of `wait(callee, method)`.
    fn wait_type(&self, callee: ObjId, method: &str) -> Result<Type, String>;
}

/// A typing context together with the names that count as method-local
/// (parameters, locals and query aliases) for the `local(y)` premise.
#[derive(Debug, Clone, Default)]
pub struct Scope {
    pub ctx: TypingContext,
    pub locals: BTreeSet<Name>,
}

impl Scope {
    pub fn new(ctx: TypingContext, locals: impl IntoIterator<Item = Name>) -> Self {
        Self {
            ctx,
            locals: locals.into_iter().collect(),
        }
    }
}

pub struct Checker<'a> {
    table: &'a ClassTable,
    runtime: Option<&'a dyn RuntimeTyping>,
}

fn err(rule: Rule, pos: Pos, message: impl Into<String>) -> TypeError {
    TypeError::new(rule, pos, message)
}

fn iface_type(name: &str) -> Type {
    if name == "Any" {
        Type::Any
    } else {
        Type::Iface(name.to_string())
    }
}

impl<'a> Checker<'a> {
    pub fn new(table: &'a ClassTable) -> Self {
        Self {
            table,
            runtime: None,
        }
    }

    pub fn with_runtime(table: &'a ClassTable, runtime: &'a dyn RuntimeTyping) -> Self {
        Self {
            table,
            runtime: Some(runtime),
        }
    }

    fn le(&self, a: &Type, b: &Type) -> bool {
        is_subtype(self.table, a, b)
    }

    fn var<'s>(&self, scope: &'s Scope, name: &str, rule: Rule, pos: Pos) -> Result<&'s Type, TypeError> {
        scope
            .ctx
            .get(name)
            .ok_or_else(|| err(rule, pos, format!("undeclared variable `{name}`")))
    }

    fn value_type(&self, value: &Value, rule: Rule, pos: Pos) -> Result<Type, TypeError> {
        match value {
            Value::Bool(_) => Ok(Type::Bool),
            Value::Null => Err(err(rule, pos, "null has no type of its own")),
            _ => self
                .runtime
                .and_then(|rt| rt.value_type(value))
                .ok_or_else(|| err(rule, pos, format!("no runtime type for `{value}`"))),
        }
    }

    /// Checks `expr` against `expected`, folding subsumption into the check.
    pub fn check_expr(&self, scope: &Scope, expr: &Expr, expected: &Type, pos: Pos) -> Result<(), TypeError> {
        match expr {
            Expr::Var(name) => {
                let ty = self.var(scope, name, Rule::TVar, pos)?;
                if self.le(ty, expected) {
                    Ok(())
                } else {
                    Err(err(
                        Rule::TSub,
                        pos,
                        format!("`{name}` has type {ty}, which is not a subtype of {expected}"),
                    ))
                }
            }
            Expr::Lit(Value::Null) => {
                if expected.is_reference() {
                    Ok(())
                } else {
                    Err(err(Rule::TLit, pos, format!("null does not inhabit {expected}")))
                }
            }
            Expr::Lit(value) => {
                if self.runtime.is_none() && value.is_entity() {
                    return Err(err(Rule::TLit, pos, "runtime value in a source program"));
                }
                let ty = self.value_type(value, Rule::TLit, pos)?;
                if self.le(&ty, expected) {
                    Ok(())
                } else {
                    Err(err(
                        Rule::TLit,
                        pos,
                        format!("`{value}` has type {ty}, which is not a subtype of {expected}"),
                    ))
                }
            }
            Expr::Call {
                target,
                method,
                args,
            } => {
                let target_ty = match target {
                    Operand::Var(name) => self.var(scope, name, Rule::TCall, pos)?.clone(),
                    Operand::Value(value) => {
                        if self.runtime.is_none() {
                            return Err(err(Rule::TCall, pos, "runtime value in a source program"));
                        }
                        self.value_type(value, Rule::TCall, pos)?
                    }
                };
                let arg_tys = args
                    .iter()
                    .map(|a| self.var(scope, a, Rule::TCall, pos).cloned())
                    .collect::<Result<Vec<_>, _>>()?;
                if !self.table.match_method(method, &arg_tys, &target_ty) {
                    let shown: Vec<String> = arg_tys.iter().map(ToString::to_string).collect();
                    return Err(err(
                        Rule::TCall,
                        pos,
                        format!(
                            "no method `{method}({})` in {target_ty}",
                            shown.join(", ")
                        ),
                    ));
                }
                let ret = self
                    .table
                    .ret_type(&target_ty, method)
                    .map_err(|e| err(Rule::TCall, pos, e.to_string()))?;
                if self.le(&ret, expected) {
                    Ok(())
                } else {
                    Err(err(
                        Rule::TCall,
                        pos,
                        format!("`{method}` returns {ret}, which is not a subtype of {expected}"),
                    ))
                }
            }
            Expr::New { class, args } => {
                let params = self
                    .table
                    .ptypes(class)
                    .map_err(|e| err(Rule::TNew, pos, e.to_string()))?;
                if params.len() != args.len() {
                    return Err(err(
                        Rule::TNew,
                        pos,
                        format!(
                            "`{class}` takes {} argument(s), {} given",
                            params.len(),
                            args.len()
                        ),
                    ));
                }
                for (arg, param) in args.iter().zip(&params) {
                    let ty = self.var(scope, arg, Rule::TNew, pos)?;
                    if !self.le(ty, param) {
                        return Err(err(
                            Rule::TNew,
                            pos,
                            format!("argument `{arg}` has type {ty}, expected {param}"),
                        ));
                    }
                }
                if !matches!(expected, Type::Iface(_) | Type::Any | Type::Class(_)) {
                    return Err(err(
                        Rule::TNew,
                        pos,
                        format!("`new {class}` cannot be given type {expected}"),
                    ));
                }
                if self.le(&Type::Class(class.clone()), expected) {
                    Ok(())
                } else {
                    Err(err(
                        Rule::TNew,
                        pos,
                        format!("class `{class}` does not implement {expected}"),
                    ))
                }
            }
            Expr::NewGroup => {
                if self.le(&Type::Group(BTreeSet::new()), expected) {
                    Ok(())
                } else {
                    Err(err(
                        Rule::TGroup,
                        pos,
                        format!("newgroup has type Group<>, which is not a subtype of {expected}"),
                    ))
                }
            }
            Expr::Acquire {
                iface,
                within,
                except,
            } => {
                if let Some(group) = within {
                    let ty = self.var(scope, group, Rule::TAcquire, pos)?;
                    if !matches!(ty, Type::Group(_)) {
                        return Err(err(
                            Rule::TAcquire,
                            pos,
                            format!("`{group}` has type {ty}; acquire needs a group"),
                        ));
                    }
                }
                for name in except {
                    let ty = self.var(scope, name, Rule::TAcquire, pos)?;
                    if !ty.is_reference() {
                        return Err(err(
                            Rule::TAcquire,
                            pos,
                            format!("except-variable `{name}` has non-reference type {ty}"),
                        ));
                    }
                }
                let found = iface_type(iface);
                if self.le(&found, expected) {
                    Ok(())
                } else {
                    Err(err(
                        Rule::TAcquire,
                        pos,
                        format!("acquire yields {found}, which is not a subtype of {expected}"),
                    ))
                }
            }
            Expr::Wait { callee, method } => {
                let Some(rt) = self.runtime else {
                    return Err(err(Rule::RttWait, pos, "wait in a source program"));
                };
                let ty = rt
                    .wait_type(*callee, method)
                    .map_err(|m| err(Rule::RttWait, pos, m))?;
                if self.le(&ty, expected) {
                    Ok(())
                } else {
                    Err(err(
                        Rule::RttWait,
                        pos,
                        format!("wait({callee}, {method}) has type {ty}, expected {expected}"),
                    ))
                }
            }
        }
    }

    /// Checks a single statement and returns its effect.
    pub fn check_stmt(&self, scope: &Scope, stmt: &Stmt) -> Result<Effect, TypeError> {
        let pos = stmt.pos;
        match &stmt.kind {
            StmtKind::Skip | StmtKind::EndScope(_) => Ok(Effect::new()),
            StmtKind::Assign { target, expr } => {
                if target == "this" {
                    return Err(err(Rule::TAssign, pos, "cannot assign to `this`"));
                }
                let ty = self.var(scope, target, Rule::TAssign, pos)?;
                self.check_expr(scope, expr, ty, pos)?;
                Ok(Effect::new())
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.expect_bool(scope, cond, Rule::TConditional, pos)?;
                let left = self.check_seq(scope, then_branch)?;
                let right = self.check_seq(scope, else_branch)?;
                Ok(branch_effect(self.table, &scope.ctx, &left, &right))
            }
            StmtKind::While { cond, body } => {
                self.expect_bool(scope, cond, Rule::TWhile, pos)?;
                let body = self.check_seq(scope, body)?;
                Ok(branch_effect(self.table, &scope.ctx, &body, &Effect::new()))
            }
            StmtKind::Join {
                member,
                group,
                ifaces,
            } => {
                self.var(scope, group, Rule::TJoin, pos)?;
                if !scope.locals.contains(group) {
                    return Err(err(
                        Rule::LocalRequired,
                        pos,
                        format!("join target `{group}` must be a local variable"),
                    ));
                }
                let members = self.group_members(scope, group, Rule::TJoin, pos)?;
                self.member_covers(scope, member, ifaces, Rule::TJoin, pos)?;
                let mut upgraded = members;
                upgraded.extend(ifaces.iter().filter(|i| *i != "Any").cloned());
                Ok(Effect::new().with(group.clone(), Type::Group(upgraded)))
            }
            StmtKind::Leave {
                member,
                group,
                ifaces,
                then_branch,
                else_branch,
            } => {
                self.member_covers(scope, member, ifaces, Rule::TLeave, pos)?;
                self.group_members(scope, group, Rule::TLeave, pos)?;
                let left = self.check_seq(scope, then_branch)?;
                let right = self.check_seq(scope, else_branch)?;
                Ok(branch_effect(self.table, &scope.ctx, &left, &right))
            }
            StmtKind::SubtypeOf {
                subject,
                iface,
                alias,
                then_branch,
                else_branch,
            } => {
                let known = match self.var(scope, subject, Rule::TInspect, pos)? {
                    Type::Group(s) => s.clone(),
                    Type::Iface(j) => BTreeSet::from([j.clone()]),
                    Type::Any => BTreeSet::new(),
                    other => {
                        return Err(err(
                            Rule::TInspect,
                            pos,
                            format!("`{subject}` has type {other}; subtypeOf needs a group or interface"),
                        ))
                    }
                };
                if scope.ctx.contains(alias) {
                    return Err(err(
                        Rule::TInspect,
                        pos,
                        format!("query variable `{alias}` is already bound"),
                    ));
                }
                let mut upgraded = known;
                upgraded.insert(iface.clone());
                let mut inner = scope.clone();
                inner.ctx.insert(alias.clone(), Type::Group(upgraded));
                inner.locals.insert(alias.clone());
                let left = self.check_seq(&inner, then_branch)?;
                let right = self.check_seq(scope, else_branch)?;
                Ok(branch_effect(self.table, &scope.ctx, &left, &right))
            }
        }
    }

    fn expect_bool(&self, scope: &Scope, name: &str, rule: Rule, pos: Pos) -> Result<(), TypeError> {
        match self.var(scope, name, rule, pos)? {
            Type::Bool => Ok(()),
            other => Err(err(rule, pos, format!("`{name}` has type {other}, expected Bool"))),
        }
    }

    fn group_members(&self, scope: &Scope, name: &str, rule: Rule, pos: Pos) -> Result<BTreeSet<Name>, TypeError> {
        match self.var(scope, name, rule, pos)? {
            Type::Group(s) => Ok(s.clone()),
            other => Err(err(rule, pos, format!("`{name}` has type {other}, expected a group type"))),
        }
    }

    fn member_covers(&self, scope: &Scope, member: &str, ifaces: &[Name], rule: Rule, pos: Pos) -> Result<(), TypeError> {
        let ty = self.var(scope, member, rule, pos)?;
        for iface in ifaces {
            if !self.le(ty, &iface_type(iface)) {
                return Err(err(
                    rule,
                    pos,
                    format!("`{member}` has type {ty}, which is not a subtype of {iface}"),
                ));
            }
        }
        Ok(())
    }

    /// Checks a statement sequence, threading each statement's effect into
    /// the context of the next one. Returns the accumulated effect.
    pub fn check_seq(&self, scope: &Scope, stmts: &[Stmt]) -> Result<Effect, TypeError> {
        let mut current = scope.clone();
        let mut acc = Effect::new();
        for stmt in stmts {
            if let StmtKind::EndScope(alias) = &stmt.kind {
                current.ctx.remove(alias);
                current.locals.remove(alias);
                acc.remove(alias);
                continue;
            }
            let effect = self.check_stmt(&current, stmt)?;
            current.ctx = current.ctx.compose(&effect);
            acc = acc.compose(&effect);
        }
        Ok(acc)
    }

    /// `s; return x` against the declared return type.
    pub fn check_returning(
        &self,
        scope: &Scope,
        body: &[Stmt],
        ret: &str,
        ret_ty: &Type,
        pos: Pos,
    ) -> Result<(), TypeError> {
        let effect = self.check_seq(scope, body)?;
        let after = scope.ctx.compose(&effect);
        let ty = after
            .get(ret)
            .ok_or_else(|| err(Rule::TReturn, pos, format!("undeclared return variable `{ret}`")))?;
        if self.le(ty, ret_ty) {
            Ok(())
        } else {
            Err(err(
                Rule::TReturn,
                pos,
                format!("returned `{ret}` has type {ty}, which is not a subtype of {ret_ty}"),
            ))
        }
    }

    fn class_context(class: &ClassDecl) -> TypingContext {
        std::iter::once(("this".to_string(), Type::Class(class.name.clone())))
            .chain(class.fields.iter().map(|f| (f.name.clone(), f.ty.clone())))
            .collect()
    }

    pub fn check_method(&self, class: &ClassDecl, method: &MethodDecl) -> Result<(), TypeError> {
        let mut ctx = Self::class_context(class);
        for decl in method.sig.params.iter().chain(&method.locals) {
            ctx.insert(decl.name.clone(), decl.ty.clone());
        }
        let locals = method
            .sig
            .params
            .iter()
            .chain(&method.locals)
            .map(|d| d.name.clone());
        let scope = Scope::new(ctx, locals);
        self.check_returning(&scope, &method.body, &method.ret, &method.sig.ret, method.sig.pos)
    }

    fn check_init(&self, class: &ClassDecl) -> Result<(), TypeError> {
        let mut ctx = Self::class_context(class);
        for decl in class.params.iter().chain(&class.init.locals) {
            ctx.insert(decl.name.clone(), decl.ty.clone());
        }
        let scope = Scope::new(ctx, class.init.locals.iter().map(|d| d.name.clone()));
        self.check_seq(&scope, &class.init.body).map(drop)
    }

    /// Every method of every implemented interface must be defined with an
    /// identical signature.
    fn check_implements(&self, class: &ClassDecl) -> Vec<TypeError> {
        let mut errors = Vec::new();
        for iface in class.implements.iter().filter(|i| *i != "Any") {
            let sigs = match self.table.mtd(&Type::Iface(iface.clone())) {
                Ok(sigs) => sigs,
                Err(e) => {
                    errors.push(err(Rule::TClass, class.pos, e.to_string()));
                    continue;
                }
            };
            for sig in sigs {
                match class.method(&sig.name) {
                    None => errors.push(err(
                        Rule::TClass,
                        class.pos,
                        format!(
                            "class `{}` implements `{iface}` but does not define `{}`",
                            class.name, sig.name
                        ),
                    )),
                    Some(m) if !m.sig.same_shape(&sig) => errors.push(err(
                        Rule::TClass,
                        m.sig.pos,
                        format!(
                            "`{}.{}` does not match its signature in `{iface}`",
                            class.name, sig.name
                        ),
                    )),
                    Some(_) => {}
                }
            }
        }
        errors
    }

    pub fn check_class(&self, class: &ClassDecl) -> Vec<TypeError> {
        let mut errors = self.check_implements(class);
        if let Err(e) = self.check_init(class) {
            errors.push(e);
        }
        for method in &class.methods {
            if let Err(e) = self.check_method(class, method) {
                errors.push(e);
            }
        }
        errors
    }

    pub fn check_main(&self, main: &Block) -> Result<(), TypeError> {
        let ctx = main
            .locals
            .iter()
            .map(|d| (d.name.clone(), d.ty.clone()))
            .collect();
        let scope = Scope::new(ctx, main.locals.iter().map(|d| d.name.clone()));
        self.check_seq(&scope, &main.body).map(drop)
    }

    /// Checks every class and the main block, collecting one error per
    /// failing method body.
    pub fn check_program(&self) -> Vec<TypeError> {
        let program = self.table.program();
        let mut errors = Vec::new();
        for class in &program.classes {
            errors.extend(self.check_class(class));
        }
        if let Err(e) = self.check_main(&program.main) {
            errors.push(e);
        }
        errors
    }
}
