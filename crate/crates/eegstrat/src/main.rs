fn main() { std::process::exit(eegstrat::cli::run()); }
