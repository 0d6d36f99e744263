"""Classification of Bell-diagonal qudit states."""
