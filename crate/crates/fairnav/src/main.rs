fn main() {
    std::process::exit(fairnav::cli::main_entry());
}
