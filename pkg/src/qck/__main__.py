from qck.cli import main

main()
