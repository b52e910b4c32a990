import pytest

from lowfat import Allocator, Mode, ReservationError, SizeConfig

# A small configuration whose regions are tiny enough to sweep exhaustively.
SMALL_SIZES = (16, 32, 48, 64, 80, 96, 128, 192, 256, 384, 512, 768, 1024,
               2048, 4096, 8192, 16384)
SMALL = SizeConfig(1 << 16, SMALL_SIZES, Mode.SIMULATED)
DEFAULT_SIM = SizeConfig.default(Mode.SIMULATED)


@pytest.fixture
def small():
    with Allocator(SMALL) as a:
        yield a


@pytest.fixture
def sim():
    with Allocator(DEFAULT_SIM) as a:
        yield a


@pytest.fixture
def real():
    try:
        a = Allocator(SizeConfig.default()).reserve()
    except ReservationError as e:
        pytest.skip(f"real reservations unavailable: {e}")
    try:
        yield a
    finally:
        a.close()
