fn main() {
    std::process::exit(grammar_infer::cli::main());
}
