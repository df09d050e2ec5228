//! Prefix mini-language for the function catalog, e.g. `gamma`,
//! `exppoly[1,0,0]`, `tan[1.5707963267948966,0]`, `rat[1,-3]/[1,1]`,
//! `shift(gamma,1)`, `prod(a,b)`, `quot(a,b)`, `pow(e,k)`, `expof(e)`.

use super::FunctionExpr;
use crate::error::{Error, Result};
use crate::C;

/// Canonical text form of a complex number: `a`, `bi`, or `a+bi` / `a-bi`.
pub fn format_complex(v: C) -> String {
    let re = if v.re == 0.0 { 0.0 } else { v.re };
    let im = if v.im == 0.0 { 0.0 } else { v.im };
    if im == 0.0 {
        format!("{re}")
    } else if re == 0.0 {
        format!("{im}i")
    } else if im < 0.0 {
        format!("{re}-{}i", -im)
    } else {
        format!("{re}+{im}i")
    }
}

/// Parse a complex literal in the forms accepted by [`format_complex`],
/// plus bare `i` / `-i`.
pub fn parse_complex(text: &str) -> Result<C> {
    let mut cur = Cursor::new(text.trim());
    let v = cur.complex()?;
    cur.skip_ws();
    if !cur.done() {
        return Err(cur.err("trailing input after complex literal"));
    }
    Ok(v)
}

/// Parse a catalog function from its text form.
pub fn parse_function(text: &str) -> Result<FunctionExpr> {
    let mut cur = Cursor::new(text.trim());
    let e = cur.function()?;
    cur.skip_ws();
    if !cur.done() {
        return Err(cur.err("trailing input after function expression"));
    }
    Ok(e)
}

/// Render a catalog function; `parse_function` round-trips the output.
pub fn render_function(expr: &FunctionExpr) -> String {
    match expr {
        FunctionExpr::Rational(r) => {
            let numer = coeff_list(&r.numer);
            if r.denom.len() == 1 && r.denom[0] == C::new(1.0, 0.0) {
                format!("rat[{numer}]")
            } else {
                format!("rat[{numer}]/[{}]", coeff_list(&r.denom))
            }
        }
        FunctionExpr::ExpPoly { coeffs } => format!("exppoly[{}]", coeff_list(coeffs)),
        FunctionExpr::Tan { scale, shift } => {
            format!("tan[{},{}]", format_complex(*scale), format_complex(*shift))
        }
        FunctionExpr::Gamma => "gamma".to_string(),
        FunctionExpr::ReciprocalGamma => "recgamma".to_string(),
        FunctionExpr::ExpOf(inner) => format!("expof({})", render_function(inner)),
        FunctionExpr::Product(a, b) => {
            format!("prod({},{})", render_function(a), render_function(b))
        }
        FunctionExpr::Quotient(a, b) => {
            format!("quot({},{})", render_function(a), render_function(b))
        }
        FunctionExpr::IntPow(base, k) => format!("pow({},{k})", render_function(base)),
        FunctionExpr::Shift(inner, c) => {
            format!("shift({},{})", render_function(inner), format_complex(*c))
        }
    }
}

fn coeff_list(coeffs: &[C]) -> String {
    coeffs.iter().map(|c| format_complex(*c)).collect::<Vec<_>>().join(",")
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor { text, pos: 0 }
    }

    fn err(&self, msg: &str) -> Error {
        Error::FunctionParse { pos: self.pos, msg: msg.to_string() }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn done(&self) -> bool {
        self.pos >= self.text.len()
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(|c: char| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, token: &str) -> Result<()> {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            Ok(())
        } else {
            Err(self.err(&format!("expected `{token}`")))
        }
    }

    fn try_eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    /// Real literal: [+-]?digits[.digits][(e|E)[+-]digits]
    fn real(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.text.as_bytes();
        let mut i = self.pos;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        let digits_from = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'.' {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i == digits_from {
            return Err(self.err("expected number"));
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            let exp_from = j;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            if j > exp_from {
                i = j;
            }
        }
        self.pos = i;
        self.text[start..i].parse::<f64>().map_err(|_| self.err("malformed number"))
    }

    fn complex(&mut self) -> Result<C> {
        self.skip_ws();
        // bare i / -i / +i
        if self.try_eat("i") {
            return Ok(C::new(0.0, 1.0));
        }
        if self.rest().starts_with("-i") {
            self.pos += 2;
            return Ok(C::new(0.0, -1.0));
        }
        if self.rest().starts_with("+i") {
            self.pos += 2;
            return Ok(C::new(0.0, 1.0));
        }
        let first = self.real()?;
        if self.try_eat("i") {
            return Ok(C::new(0.0, first));
        }
        // possible imaginary tail: the sign belongs to the tail number
        let save = self.pos;
        if self.rest().starts_with('+') || self.rest().starts_with('-') {
            if self.rest().starts_with("+i") {
                self.pos += 2;
                return Ok(C::new(first, 1.0));
            }
            if self.rest().starts_with("-i") {
                self.pos += 2;
                return Ok(C::new(first, -1.0));
            }
            if let Ok(second) = self.real() {
                if self.try_eat("i") {
                    return Ok(C::new(first, second));
                }
            }
            self.pos = save;
        }
        Ok(C::new(first, 0.0))
    }

    fn int(&mut self) -> Result<i32> {
        let v = self.real()?;
        if v.fract() != 0.0 || v.abs() > i32::MAX as f64 {
            return Err(self.err("expected integer"));
        }
        Ok(v as i32)
    }

    fn coeff_list(&mut self) -> Result<Vec<C>> {
        self.eat("[")?;
        let mut out = vec![self.complex()?];
        while self.try_eat(",") {
            out.push(self.complex()?);
        }
        self.eat("]")?;
        Ok(out)
    }

    fn function(&mut self) -> Result<FunctionExpr> {
        self.skip_ws();
        if self.try_eat("gamma") {
            return Ok(FunctionExpr::Gamma);
        }
        if self.try_eat("recgamma") {
            return Ok(FunctionExpr::ReciprocalGamma);
        }
        if self.try_eat("exppoly") {
            return Ok(FunctionExpr::exp_poly(self.coeff_list()?));
        }
        if self.try_eat("tan") {
            self.eat("[")?;
            let scale = self.complex()?;
            self.eat(",")?;
            let shift = self.complex()?;
            self.eat("]")?;
            return FunctionExpr::tan(scale, shift);
        }
        if self.try_eat("rat") {
            let numer = self.coeff_list()?;
            let denom = if self.try_eat("/") { self.coeff_list()? } else { vec![C::new(1.0, 0.0)] };
            return FunctionExpr::rational(numer, denom);
        }
        if self.try_eat("shift") {
            self.eat("(")?;
            let inner = self.function()?;
            self.eat(",")?;
            let c = self.complex()?;
            self.eat(")")?;
            return Ok(inner.shifted(c));
        }
        if self.try_eat("expof") {
            self.eat("(")?;
            let inner = self.function()?;
            self.eat(")")?;
            return FunctionExpr::exp_of(inner);
        }
        if self.try_eat("prod") {
            self.eat("(")?;
            let a = self.function()?;
            self.eat(",")?;
            let b = self.function()?;
            self.eat(")")?;
            return Ok(FunctionExpr::product(a, b));
        }
        if self.try_eat("quot") {
            self.eat("(")?;
            let a = self.function()?;
            self.eat(",")?;
            let b = self.function()?;
            self.eat(")")?;
            return Ok(FunctionExpr::quotient(a, b));
        }
        if self.try_eat("pow") {
            self.eat("(")?;
            let base = self.function()?;
            self.eat(",")?;
            let k = self.int()?;
            self.eat(")")?;
            return FunctionExpr::int_pow(base, k);
        }
        Err(self.err("unknown function head"))
    }
}
