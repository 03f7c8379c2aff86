fn main() { std::process::exit(tempering::cli::main_with_std()) }
