"""Super-hedging prices and arbitrage diagnostics on finite discrete-time markets."""

from .diagnostics import (AipReport, AwipCertificate, Certificate, NodeVerdict, check_aip_global,
                          check_aip_node, check_awip, check_awip_global, check_na_global, check_na_node)
from .envelope import (AffineMajorant, EnvelopeValue, SampledFunction, biconjugate_at,
                       concave_envelope_1d, concave_envelope_at, convex_envelope_of_f,
                       fenchel_conjugate)
from .errors import (CalibrationError, DimensionError, FormatError, InternalError, IpDetected,
                     NoSuccessors, ParseError, PayoffError, SizeError, SuperhedgeError,
                     ValidationError)
from .market import (EssentialBounds, MarketTree, Node, SupportSet, binomial_tree,
                     calibrate_multipliers, conditional_esssup_of_function, conditional_support,
                     essential_bounds, load_market, loads_market, read_price_series, save_market,
                     tree_from_children)
from .oracle import OracleResult, oracle_awip_tiny, oracle_full_horizon, oracle_na, oracle_one_step_1d
from .payoff import PayoffSpec
from .pricing import (BinomialScheme, BinomialValues, PriceResult, ValueSurface, extend_market,
                      price_binomial_scheme, price_call_1d, price_claim, price_convex_1d,
                      price_one_step)
from .report import RunReport

__version__ = "0.1.0"
