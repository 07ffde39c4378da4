"""Uplink outage: the fixed-power error floor and how power control removes it.

With both users at full power, raising the power at a fixed ratio cannot push
the outage below a floor set by the interference from the second user. Dynamic
power control backs the farther user off, and outage keeps falling. The
hybrid scheme switches to orthogonal access when that predicts lower outage.
"""

from posnoma.analysis import PairScenario, UplinkPower, decoding_error_prob_fading_free, oma_cop, uplink_cop, uplink_cop_floor
from posnoma.channel import LinkConfig
from posnoma.power import dpc_optimal_power
from posnoma.simulate import hybrid_uplink_select

link = LinkConfig(alpha=3.5, sigma_ob2=9.0, target_rate_bpcu=0.1)
sc = PairScenario.from_positions((3, 3), (15, 15), link)
pe1 = decoding_error_prob_fading_free(sc)
print(f"fixed-power floor at equal powers: {uplink_cop_floor(sc, 1.0, pe1):.2e}\n")

print("power dBm   fixed COP    DPC COP      OMA COP      hybrid choice")
for p in (0.0, 10.0, 20.0, 30.0, 40.0, 50.0):
    rho = link.snr(p)
    fixed = uplink_cop(sc, UplinkPower(rho, rho), pe1)
    sol = dpc_optimal_power(sc, rho, rho)
    dpc = uplink_cop(sc, UplinkPower(sol.rho1_star, sol.rho2_star), pe1)
    scheme, _ = hybrid_uplink_select(sc, UplinkPower(rho, rho), pe1)
    print(f"{p:9.0f}   {fixed:.3e}   {dpc:.3e}   {oma_cop(sc, rho):.3e}   {scheme.name}")
