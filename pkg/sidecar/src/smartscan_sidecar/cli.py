import click


@click.command()
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=None, help="Overrides the config port.")
def main(config_file, host, port):
    """Run the inference sidecar."""
    import uvicorn

    from smartscan_sidecar.app import create_app
    from smartscan_sidecar.config import load_config

    config = load_config(config_file)
    uvicorn.run(create_app(config), host=host, port=port or config.port)


if __name__ == "__main__":
    main()
