fn main() {
    std::process::exit(cellgraph::cli::run());
}
