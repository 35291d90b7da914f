fn main() {
    let seed = std::env::var("ATE_LAB_SEED").ok();
    std::process::exit(ate_lab_cli::run(std::env::args_os(), seed.as_deref()));
}
