use crate::ast::{
    is_synthetic, Block, ClassDecl, Expr, MethodDecl, Operand, Program, Signature, Stmt, StmtKind,
    VarDecl,
};
use std::fmt::Write;

/// Renders a program in the concrete syntax accepted by `parse`.
/// Compiler-generated names are left out, so reparsing reproduces them.
pub fn print_program(program: &Program) -> String {
    let mut out = String::new();
    for iface in &program.interfaces {
        out.push_str("interface ");
        out.push_str(&iface.name);
        if !iface.extends.is_empty() {
            let _ = write!(out, " extends {}", iface.extends.join(", "));
        }
        out.push_str(" {\n");
        for sig in &iface.signatures {
            let _ = writeln!(out, "    {};", signature(sig));
        }
        out.push_str("}\n\n");
    }
    for class in &program.classes {
        print_class(&mut out, class);
    }
    out.push_str("{\n");
    print_block(&mut out, &program.main, 1);
    out.push_str("}\n");
    out
}

fn signature(sig: &Signature) -> String {
    let ret = if sig.is_void {
        "void".to_string()
    } else {
        sig.ret.to_string()
    };
    format!("{ret} {}({})", sig.name, params(&sig.params))
}

fn params(decls: &[VarDecl]) -> String {
    decls
        .iter()
        .map(|d| format!("{} {}", d.ty, d.name))
        .collect::<Vec<_>>()
        .join(", ")
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn print_class(out: &mut String, class: &ClassDecl) {
    let _ = write!(out, "class {}({})", class.name, params(&class.params));
    if !class.implements.is_empty() {
        let _ = write!(out, " implements {}", class.implements.join(", "));
    }
    out.push_str(" {\n");
    for field in &class.fields {
        let _ = writeln!(out, "    {} {};", field.ty, field.name);
    }
    if !class.init.locals.is_empty() || !class.init.body.is_empty() {
        out.push_str("    {\n");
        print_block(out, &class.init, 2);
        out.push_str("    }\n");
    }
    for method in &class.methods {
        print_method(out, method);
    }
    out.push_str("}\n\n");
}

fn print_method(out: &mut String, method: &MethodDecl) {
    let _ = writeln!(out, "    {} {{", signature(&method.sig));
    for local in method.locals.iter().filter(|d| !is_synthetic(&d.name)) {
        let _ = writeln!(out, "        {} {};", local.ty, local.name);
    }
    print_stmts(out, &method.body, 2);
    if method.sig.is_void {
        out.push_str("        return;\n");
    } else {
        let _ = writeln!(out, "        return {};", method.ret);
    }
    out.push_str("    }\n");
}

fn print_block(out: &mut String, block: &Block, depth: usize) {
    for local in &block.locals {
        indent(out, depth);
        let _ = writeln!(out, "{} {};", local.ty, local.name);
    }
    print_stmts(out, &block.body, depth);
}

fn print_stmts(out: &mut String, stmts: &[Stmt], depth: usize) {
    for stmt in stmts {
        print_stmt(out, stmt, depth);
    }
}

fn print_branch(out: &mut String, stmts: &[Stmt], depth: usize) {
    out.push_str("{\n");
    print_stmts(out, stmts, depth + 1);
    indent(out, depth);
    out.push('}');
}

fn print_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    indent(out, depth);
    match &stmt.kind {
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let _ = write!(out, "if {cond} ");
            print_branch(out, then_branch, depth);
            out.push_str(" else ");
            print_branch(out, else_branch, depth);
        }
        StmtKind::While { cond, body } => {
            let _ = write!(out, "while {cond} ");
            print_branch(out, body, depth);
        }
        StmtKind::Leave {
            then_branch,
            else_branch,
            ..
        }
        | StmtKind::SubtypeOf {
            then_branch,
            else_branch,
            ..
        } => {
            out.push_str(&stmt_head(stmt));
            out.push(' ');
            print_branch(out, then_branch, depth);
            out.push_str(" else ");
            print_branch(out, else_branch, depth);
        }
        _ => {
            out.push_str(&stmt_head(stmt));
            out.push(';');
        }
    }
    out.push('\n');
}

fn operand(op: &Operand) -> String {
    match op {
        Operand::Var(name) => name.clone(),
        Operand::Value(v) => v.to_string(),
    }
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Var(name) => name.clone(),
        Expr::Lit(v) => v.to_string(),
        Expr::Call {
            target,
            method,
            args,
        } => format!("{}.{method}({})", operand(target), args.join(", ")),
        Expr::New { class, args } => format!("new {class}({})", args.join(", ")),
        Expr::NewGroup => "newgroup".to_string(),
        Expr::Acquire {
            iface,
            within,
            except,
        } => {
            let mut s = format!("acquire {iface}");
            if let Some(g) = within {
                let _ = write!(s, " in {g}");
            }
            if !except.is_empty() {
                let _ = write!(s, " except {}", except.join(", "));
            }
            s
        }
        Expr::Wait { callee, method } => format!("wait({callee}, {method})"),
    }
}

/// One-line rendering of a statement with nested blocks elided.
pub fn stmt_head(stmt: &Stmt) -> String {
    match &stmt.kind {
        StmtKind::Skip => "skip".to_string(),
        StmtKind::Assign { target, expr: e } => format!("{target} = {}", expr(e)),
        StmtKind::If { cond, .. } => format!("if {cond} {{..}} else {{..}}"),
        StmtKind::While { cond, .. } => format!("while {cond} {{..}}"),
        StmtKind::Join {
            member,
            group,
            ifaces,
        } => format!("{member} joins {group} as {}", ifaces.join(", ")),
        StmtKind::Leave {
            member,
            group,
            ifaces,
            ..
        } => format!("{member} leaves {group} as {}", ifaces.join(", ")),
        StmtKind::SubtypeOf {
            subject,
            iface,
            alias,
            ..
        } => {
            if is_synthetic(alias) {
                format!("{subject} subtypeOf {iface}")
            } else {
                format!("{subject} subtypeOf {iface} {alias}")
            }
        }
        StmtKind::EndScope(alias) => format!("end {alias}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    const SAMPLE: &str = r#"
interface Word {}
interface Dictionary extends Any { Bool lookup(Word w); }
class Plain(Bool strict) implements Dictionary {
    Bool seen;
    { Bool t; t = true; seen = t; }
    Bool lookup(Word w) { Bool r; r = seen; return r; }
    void reset() { seen = strict; return; }
}
{
    Dictionary d; Group<Dictionary> g; Group<> e; Bool b; Any q;
    b = true;
    d = new Plain(b);
    e = newgroup;
    d joins e as Dictionary;
    q = acquire Dictionary in e except d;
    while b { b = false; }
    if b { skip; } else { skip; }
    d leaves e as Dictionary { skip; } else { skip; }
    e subtypeOf Dictionary { skip; } else { skip; }
    e subtypeOf Dictionary named { skip; } else { }
}
"#;

    #[test]
    fn round_trip_is_stable() {
        let ast = parse(SAMPLE).unwrap();
        let printed = print_program(&ast);
        let again = parse(&printed).unwrap();
        assert_eq!(ast, again);
        assert_eq!(printed, print_program(&again));
    }

    #[test]
    fn heads_are_single_line() {
        let ast = parse(SAMPLE).unwrap();
        for stmt in &ast.main.body {
            assert!(!stmt_head(stmt).contains('\n'));
        }
        assert_eq!(stmt_head(&ast.main.body[4]), "q = acquire Dictionary in e except d");
    }
}
