fn main() {
    std::process::exit(nma::cli::main());
}
