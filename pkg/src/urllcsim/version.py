from .compat import metadata


def get_version() -> str:
    """
    Installed version of urllcsim, `0.0.0` when running from a source checkout
    """
    try:
        return metadata.version("urllcsim")

    except metadata.PackageNotFoundError:
        return "0.0.0"
