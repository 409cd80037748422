"""Unit conversions between atomic units and the eV/fs used at I/O boundaries."""

from dataclasses import dataclass


@dataclass(frozen=True)
class UnitSystem:
    hartree_ev: float = 27.2114
    au_time_fs: float = 0.0241888
    c_au: float = 137.036

    def ev_to_ha(self, x):
        return x / self.hartree_ev

    def ha_to_ev(self, x):
        return x * self.hartree_ev

    def fs_to_au(self, t):
        return t / self.au_time_fs

    def au_to_fs(self, t):
        return t * self.au_time_fs


UNITS = UnitSystem()
C_AU = UNITS.c_au
