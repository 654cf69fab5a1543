fn main() {
    let seed = std::env::var("KOG_SEED").ok();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = kog::cli::main_with(std::env::args_os(), seed.as_deref(), &mut stdout.lock(), &mut stderr.lock());
    std::process::exit(code);
}
