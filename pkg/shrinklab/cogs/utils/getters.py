from typing import Optional, Tuple

from shrinklab.cogs.models.distributions import HardInstance, JointDistribution
from shrinklab.cogs.models.exceptions import GridMismatch, UsageError
from shrinklab.cogs.models.mechanism import Mechanism

def get_market(inst: HardInstance, market: str) -> JointDistribution:
    """Returns the full or the shrunken joint distribution of an instance."""
    if market == "full":
        return inst.joint_n
    if market == "shrunk":
        return inst.joint_shrunk
    raise UsageError(f"unknown market {market}", "market")

def get_mechanism_market(inst: HardInstance, mech: Mechanism, market: Optional[str] = None) -> Tuple[str, JointDistribution]:
    """Returns the market a mechanism is defined over, detected from its grids unless given."""
    if market is not None:
        dist = get_market(inst, market)
        if not dist.same_grids(mech.grids):
            raise GridMismatch(f"mechanism grids do not match the {market} market", "grids")
        return market, dist
    for name in ("full", "shrunk"):
        dist = get_market(inst, name)
        if dist.same_grids(mech.grids):
            return name, dist
    raise GridMismatch("mechanism grids match neither market of the instance", "grids")
