use std::process::ExitCode;

fn threads() -> Option<usize> {
    let raw = std::env::var("UHT_THREADS").ok()?;
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => Some(n),
        _ => {
            log::warn!("ignoring UHT_THREADS={raw:?}; expected a positive integer");
            None
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads() {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("uht: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    let code = pool.install(|| uht_cli::run(std::env::args_os()));
    ExitCode::from(code as u8)
}
