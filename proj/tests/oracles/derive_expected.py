"""Independent high-precision oracle for values frozen into the C++ tests.

Run: python3 tests/oracles/derive_expected.py
Nothing here imports or calls the C++ library.
"""
import itertools
import mpmath as mp

mp.mp.dps = 50


def softmax(v):
    e = [mp.e ** mp.mpf(x) for x in v]
    s = sum(e)
    return [x / s for x in e]


def tc(joint, prem, hyp):
    return [mp.mpf(j) * mp.log(mp.mpf(j) ** 2 / (mp.mpf(p) * mp.mpf(h)))
            for j, p, h in zip(joint, prem, hyp)]


def show(name, values):
    print(name, ", ".join(mp.nstr(v, 17) for v in values))


show("softmax(-1.2,-0.7,-3.1):", softmax(["-1.2", "-0.7", "-3.1"]))
show("tc((.6,.4),(.8,.2),(.8,.2)):", tc(["0.6", "0.4"], ["0.8", "0.2"], ["0.8", "0.2"]))
show("tc((.4,.6),(.5,.5),(.1,.9)):", tc(["0.4", "0.6"], ["0.5", "0.5"], ["0.1", "0.9"]))
show("cc (0.7,0.3)/(0.875,0.125):", [x / (mp.mpf("0.8") + mp.mpf("2.4"))
                                      for x in (mp.mpf("0.7") / mp.mpf("0.875"),
                                                mp.mpf("0.3") / mp.mpf("0.125"))])
show("dcpmi (0.6,0.4)/(0.75,0.25):", [mp.log(mp.mpf("0.6") / mp.mpf("0.75")),
                                       mp.log(mp.mpf("0.4") / mp.mpf("0.25"))])


def peaked(label, mass, c):
    rest = (1 - mass) / (c - 1)
    return [mass if k == label else rest for k in range(c)]


def mix(w, a, b):
    return [w * x + (1 - w) * y for x, y in zip(a, b)]


def argmax(v):
    best = 0
    for k in range(1, len(v)):
        if v[k] > v[best]:
            best = k
    return best


def synthetic_expectation(s, beta_p, beta_h, mass, c):
    """Exact expectation over the generator's closed-form mixture.

    gold and confound are independent and uniform over C labels, so we
    enumerate every (gold, confound) pair with weight 1/C^2.
    """
    uniform = [mp.mpf(1) / c] * c
    orig = tcacc = 0
    errors = aligned_h = aligned_p = 0
    for gold, conf in itertools.product(range(c), repeat=2):
        w = mp.mpf(1) / (c * c)
        joint = mix(s, peaked(gold, mass, c), peaked(conf, mass, c))
        prem = mix(beta_p, peaked(conf, mass, c), uniform)
        hyp = mix(beta_h, peaked(conf, mass, c), uniform)
        o = argmax(joint)
        t = argmax(tc(joint, prem, hyp))
        orig += w * (o == gold)
        tcacc += w * (t == gold)
        if o != gold:
            errors += w
            aligned_h += w * (o == argmax(hyp))
            aligned_p += w * (o == argmax(prem))
    return orig, tcacc, errors, aligned_h / errors if errors else None, \
        aligned_p / errors if errors else None


o, t, e, ah, ap = synthetic_expectation(mp.mpf("0.4"), mp.mpf(0), mp.mpf("0.9"), mp.mpf("0.9"), 2)
print("synthetic s=0.4 bp=0 bh=0.9 m=0.9 C=2: original", mp.nstr(o * 100, 8),
      "tc", mp.nstr(t * 100, 8), "error-rate", mp.nstr(e, 8),
      "hyp-alignment", mp.nstr(ah * 100, 8), "prem-alignment", mp.nstr(ap * 100, 8))
