use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(mmsim_cli::LOG_ENV, "warn"))
        .init();
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = mmsim_cli::run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    ExitCode::from(code as u8)
}
