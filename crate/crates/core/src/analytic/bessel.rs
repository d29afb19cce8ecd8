/// First zero of `J_0`.
pub const J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

/// Bessel function of the first kind `J_m(x)` for integer order.
///
/// Miller's backward recurrence from an order well above `max(|m|, |x|)`,
/// normalized with `J_0 + 2 sum_k J_2k = 1`. Negative orders and arguments
/// follow from `J_{-m}(x) = (-1)^m J_m(x)` and `J_m(-x) = (-1)^m J_m(x)`.
pub fn bessel_j(m: i32, x: f64) -> f64 {
    let n = m.unsigned_abs();
    let odd = n % 2 == 1;
    // (-1)^m appears once for a negative order and once for a negative argument
    let flip = odd && ((m < 0) != (x < 0.0));
    let value = bessel_j_nonneg(n, x.abs());
    if flip {
        -value
    } else {
        value
    }
}

fn bessel_j_nonneg(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if !x.is_finite() {
        return f64::NAN;
    }
    let top = (n as f64).max(x);
    let mut start = (top + (160.0 * top).sqrt() + 30.0).ceil() as u32;
    start += start % 2;

    const BIG: f64 = 1e250;
    let two_over_x = 2.0 / x;
    let mut above = 0.0; // J_{k+1}
    let mut here = 1e-300; // J_k
    let mut sum = 0.0;
    let mut wanted = 0.0;
    for k in (1..=start).rev() {
        // J_{k-1} = (2k/x) J_k - J_{k+1}
        let below = k as f64 * two_over_x * here - above;
        above = here;
        here = below;
        if here.abs() > BIG {
            here /= BIG;
            above /= BIG;
            sum /= BIG;
            wanted /= BIG;
        }
        let order = k - 1;
        if order == n {
            wanted = here;
        }
        if order % 2 == 0 && order != 0 {
            sum += 2.0 * here;
        }
    }
    sum += here;
    wanted / sum
}
