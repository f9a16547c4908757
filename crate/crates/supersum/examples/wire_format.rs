//! Accumulator state as bytes: encode, hex dump, decode, merge.

use supersum::{
    decode_accumulator, encode_accumulator, merge_add, RadixConfig, SparseAccumulator,
};

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn main() -> supersum::Result<()> {
    let radix = RadixConfig::binary64();

    let mut a = SparseAccumulator::new(radix);
    a.add_double(1.0)?;
    a.add_double(1e-300)?;
    let mut b = SparseAccumulator::new(radix);
    b.add_double(0.25)?;

    let wire_a = encode_accumulator(&a);
    let wire_b = encode_accumulator(&b);
    println!("a: {} digits, {} bytes", a.digits().len(), wire_a.len());
    println!("   {}", hex(&wire_a));
    println!("b: {} digits, {} bytes", b.digits().len(), wire_b.len());
    println!("   {}", hex(&wire_b));

    // The receiving side insists on the same digit width.
    let a2 = decode_accumulator(&wire_a, radix)?;
    let b2 = decode_accumulator(&wire_b, radix)?;
    let merged = merge_add(&a2, &b2)?;
    let sum = merged.round(3)?;
    println!("decoded and merged: {} (exact = {})", sum.value, sum.exact);
    // The 1e-300 tail is real but far below the rounding boundary of 1.25.
    assert_eq!(sum.value, 1.25);
    assert!(!sum.exact);

    let narrow = RadixConfig::new(8)?;
    let err = decode_accumulator(&wire_a, narrow).unwrap_err();
    println!("width mismatch is refused: {err}");
    Ok(())
}
