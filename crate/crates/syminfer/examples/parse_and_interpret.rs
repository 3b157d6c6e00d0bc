//! Parse a small program, pretty-print it back, and collect the concrete
//! states recorded at its marked location on a couple of inputs.

use num_bigint::BigInt;
use syminfer::lang::{interpret, parse, pretty_print};

fn main() {
    let src = "\
fn idiv(x1: int, x2: int) {
  assume(x1 >= 0 && x2 >= 1);
  int y1 = 0;
  int y2 = 0;
  int y3 = x1;
  @L;
  while (y3 != 0) {
    if (y2 + 1 == x2) {
      y1 = y1 + 1;
      y2 = 0;
      y3 = y3 - 1;
    } else {
      y2 = y2 + 1;
      y3 = y3 - 1;
    }
  }
}
";
    let prog = parse(src).expect("parses");
    println!("{}", pretty_print(&prog));
    println!("variables: {:?}", prog.vars());

    for inputs in [[15, 2], [4, 1]] {
        let inputs: Vec<BigInt> = inputs.iter().map(|&v| BigInt::from(v)).collect();
        let run = interpret(&prog, &inputs, "L", 100_000);
        println!("\ninputs {:?} -> {} L-states:", inputs, run.states.len());
        for s in run.states.iter().take(4) {
            println!("  {:?}", s.values);
        }
        if run.states.len() > 4 {
            println!("  ... ({} more)", run.states.len() - 4);
        }
    }
}
