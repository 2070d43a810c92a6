fn main() {
    std::process::exit(vosmerge::cli::main());
}
