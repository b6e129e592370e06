fn main() {
    std::process::exit(p2pgnn::cli::main());
}
