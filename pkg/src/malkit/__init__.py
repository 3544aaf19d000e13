"""Decision procedures for malnormal and malcharacteristic subgroups of
free and triangle groups, small cancellation certification, coset
enumeration, and automorphism-induced HNN-extension building."""

__version__ = "0.1.0"
