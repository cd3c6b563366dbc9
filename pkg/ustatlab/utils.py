def is_ascending_grid(values):
    """
    Validates that a sequence of sample sizes is strictly increasing positive integers.
    """
    if not values:
        return False
    if any(not isinstance(v, int) or isinstance(v, bool) or v < 1 for v in values):
        return False
    return all(b > a for a, b in zip(values, values[1:]))


def parse_number_list(text, cast=int):
    """
    Parses a comma-separated list such as "50,200,800".
    """
    if isinstance(text, (list, tuple)):
        return [cast(v) for v in text]
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    return [cast(p) for p in parts]
