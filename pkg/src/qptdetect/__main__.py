from qptdetect.cli import entry

entry()
