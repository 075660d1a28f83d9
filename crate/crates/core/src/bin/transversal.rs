fn main() {
    std::process::exit(transversal::cli::main());
}
