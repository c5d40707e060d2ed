from shrinklab.main import run

run()
