use std::process::ExitCode;

fn main() -> ExitCode {
    fano_qpt::cli::init_threads();
    let code = fano_qpt::cli::run(
        std::env::args_os(),
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    );
    ExitCode::from(code as u8)
}
