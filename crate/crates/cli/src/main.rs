use clap::Parser;
use riskmdp::args::Cli;

fn main() {
    let cli = Cli::parse();
    let argv = std::env::args().skip(1).collect();
    std::process::exit(riskmdp::run(&cli, argv));
}
