fn main() {
    std::process::exit(taxed_ruin_cli::run(std::env::args_os()));
}
