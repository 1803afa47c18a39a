fn main() {
    std::process::exit(mobius_energy::run(std::env::args_os()));
}
