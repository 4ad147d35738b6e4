fn main() {
    std::process::exit(ips_ergodicity::harness::main_with_args(std::env::args_os().collect()));
}
